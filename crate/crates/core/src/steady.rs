//! Discrete steady states `y'' = f(x, y)` with Dirichlet data, and
//! continuation paths between them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::export::{csv_table, fmt17};
use crate::fdsolver::sup_norm;
use crate::mesh::Grid1D;
use crate::nonlinearity::Nonlinearity;

pub const NEWTON_MAX_ITER: usize = 100;
pub const NEWTON_MAX_HALVINGS: usize = 20;
pub const STEADY_TOL: f64 = 1e-10;

/// Continuation sub-steps tried between two requested path states.
const MAX_SUBSTEP_LEVELS: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub profile: Vec<f64>,
    pub boundary: (f64, f64),
    pub residual: f64,
}

impl SteadyState {
    pub fn min_boundary(&self) -> f64 {
        self.boundary.0.min(self.boundary.1)
    }

    /// Constant profile; only steady when `f(x, value) = 0`.
    pub fn constant(f: &Nonlinearity, grid: &Grid1D, value: f64) -> Result<Self> {
        solve_steady(f, value, value, grid, &vec![value; grid.len()])
    }
}

/// Residual `(y_{j+1} - 2 y_j + y_{j-1}) / dx^2 - f(x_j, y_j)` at interior nodes.
fn defect(f: &Nonlinearity, grid: &Grid1D, y: &[f64], out: &mut [f64]) {
    let nx = grid.nx();
    let inv_dx2 = 1.0 / (grid.dx() * grid.dx());
    for j in 1..nx {
        out[j - 1] = (y[j + 1] - 2.0 * y[j] + y[j - 1]) * inv_dx2 - f.eval(0.0, grid.node(j), y[j]);
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(
        0.0_f64,
        |m, a| if a.is_nan() { f64::NAN } else { m.max(a.abs()) },
    )
}

/// Thomas algorithm for a tridiagonal system with constant off-diagonal `off`.
fn solve_tridiagonal(diag: &[f64], off: f64, rhs: &mut [f64]) -> bool {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 || !denom.is_finite() {
        return false;
    }
    c[0] = off / denom;
    rhs[0] /= denom;
    for k in 1..n {
        denom = diag[k] - off * c[k - 1];
        if denom == 0.0 || !denom.is_finite() {
            return false;
        }
        c[k] = off / denom;
        rhs[k] = (rhs[k] - off * rhs[k - 1]) / denom;
    }
    for k in (0..n - 1).rev() {
        rhs[k] -= c[k] * rhs[k + 1];
    }
    true
}

/// Damped Newton solve of the discrete elliptic problem with pinned endpoints.
pub fn solve_steady(
    f: &Nonlinearity,
    u0: f64,
    u1: f64,
    grid: &Grid1D,
    guess: &[f64],
) -> Result<SteadyState> {
    if guess.len() != grid.len() {
        return Err(Error::MeshMismatch(format!(
            "guess has {} samples, grid has {} nodes",
            guess.len(),
            grid.len()
        )));
    }
    if !(u0.is_finite() && u1.is_finite()) || guess.iter().any(|v| !v.is_finite()) {
        return Err(invalid("steady-state data must be finite"));
    }
    let nx = grid.nx();
    let inv_dx2 = 1.0 / (grid.dx() * grid.dx());
    let mut y = guess.to_vec();
    y[0] = u0;
    y[nx] = u1;

    let mut res = vec![0.0; nx - 1];
    defect(f, grid, &y, &mut res);
    let mut norm = max_abs(&res);
    let mut trial = y.clone();
    let mut trial_res = res.clone();
    let mut diag = vec![0.0; nx - 1];
    let mut delta = vec![0.0; nx - 1];

    for _ in 0..NEWTON_MAX_ITER {
        if norm <= STEADY_TOL {
            break;
        }
        for j in 1..nx {
            diag[j - 1] = -2.0 * inv_dx2 - f.deriv(0.0, grid.node(j), y[j]);
        }
        delta.iter_mut().zip(&res).for_each(|(d, r)| *d = -r);
        if !solve_tridiagonal(&diag, inv_dx2, &mut delta) {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual: norm,
            });
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            for j in 1..nx {
                trial[j] = y[j] + lambda * delta[j - 1];
            }
            trial[0] = u0;
            trial[nx] = u1;
            defect(f, grid, &trial, &mut trial_res);
            let trial_norm = max_abs(&trial_res);
            if trial_norm < norm {
                std::mem::swap(&mut y, &mut trial);
                std::mem::swap(&mut res, &mut trial_res);
                norm = trial_norm;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !(norm <= STEADY_TOL) {
        return Err(Error::NoConvergence {
            iterations: NEWTON_MAX_ITER,
            residual: norm,
        });
    }
    Ok(SteadyState {
        profile: y,
        boundary: (u0, u1),
        residual: norm,
    })
}

/// Chain of steady states `z_0, ..., z_n` with interpolated boundary values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyPath {
    pub states: Vec<SteadyState>,
    /// Smallest boundary value along the path.
    pub nu: f64,
    /// `max_k ||z_k||_inf`.
    pub r_sup: f64,
    /// `||z_k - z_{k-1}||_inf` for `k = 1..=n`.
    pub gaps: Vec<f64>,
    pub grid: Grid1D,
}

impl SteadyPath {
    pub fn from_states(states: Vec<SteadyState>, grid: Grid1D) -> Result<Self> {
        if states.is_empty() {
            return Err(invalid("path needs at least one state"));
        }
        let nu = states
            .iter()
            .map(SteadyState::min_boundary)
            .fold(f64::INFINITY, f64::min);
        let r_sup = states
            .iter()
            .map(|s| sup_norm(&s.profile))
            .fold(0.0, f64::max);
        let gaps = states
            .windows(2)
            .map(|w| {
                w[0].profile
                    .iter()
                    .zip(&w[1].profile)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        Ok(Self {
            states,
            nu,
            r_sup,
            gaps,
            grid,
        })
    }

    pub fn segments(&self) -> usize {
        self.states.len() - 1
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }

    pub fn start(&self) -> &SteadyState {
        &self.states[0]
    }

    pub fn end(&self) -> &SteadyState {
        self.states.last().unwrap()
    }

    /// CSV `s,x,y` with `s = k / n`.
    pub fn to_csv(&self) -> String {
        let n = self.segments().max(1) as f64;
        let rows: Vec<[f64; 3]> = self
            .states
            .iter()
            .enumerate()
            .flat_map(|(k, st)| {
                let s = k as f64 / n;
                st.profile
                    .iter()
                    .enumerate()
                    .map(move |(j, y)| [s, self.grid.node(j), *y])
            })
            .collect();
        csv_table("s,x,y", rows.iter().map(|r| r.as_slice()))
    }

    /// JSON metadata `{nu, R, max_gap}`.
    pub fn metadata_json(&self) -> String {
        format!(
            "{{\"nu\":{},\"R\":{},\"max_gap\":{}}}",
            fmt17(self.nu),
            fmt17(self.r_sup),
            fmt17(self.max_gap())
        )
    }
}

fn lerp(a: (f64, f64), b: (f64, f64), s: f64) -> (f64, f64) {
    ((1.0 - s) * a.0 + s * b.0, (1.0 - s) * a.1 + s * b.1)
}

/// Advances a warm start from `from` to the boundary values `to`, splitting the
/// step into up to `2^MAX_SUBSTEP_LEVELS` pieces when Newton leaves its basin.
fn continue_to(
    f: &Nonlinearity,
    grid: &Grid1D,
    from: &SteadyState,
    to: (f64, f64),
) -> Result<SteadyState> {
    let mut last_err = None;
    for level in 0..=MAX_SUBSTEP_LEVELS {
        let pieces = 1usize << level;
        let mut state = from.clone();
        let mut ok = true;
        for p in 1..=pieces {
            let b = lerp(from.boundary, to, p as f64 / pieces as f64);
            match solve_steady(f, b.0, b.1, grid, &state.profile) {
                Ok(s) => state = s,
                Err(e) => {
                    last_err = Some(e);
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(state);
        }
    }
    Err(last_err.expect("at least one attempt failed"))
}

/// Steady path with boundary values `(1 - s) start + s end`, `s = k / n_steps`,
/// each state warm-started from its predecessor.
pub fn build_path(
    f: &Nonlinearity,
    start: &SteadyState,
    end: &SteadyState,
    n_steps: usize,
    grid: &Grid1D,
) -> Result<SteadyPath> {
    if n_steps == 0 {
        return Err(invalid("path needs at least one step"));
    }
    if start.profile.len() != grid.len() || end.profile.len() != grid.len() {
        return Err(Error::MeshMismatch(
            "path endpoints do not match the grid".into(),
        ));
    }
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(start.clone());
    for k in 1..n_steps {
        let b = lerp(start.boundary, end.boundary, k as f64 / n_steps as f64);
        let next = continue_to(f, grid, states.last().unwrap(), b)?;
        states.push(next);
    }
    states.push(end.clone());
    SteadyPath::from_states(states, *grid)
}

/// Midpoint state between `a` and `b`, warm-started from `a`.
pub fn midpoint_state(
    f: &Nonlinearity,
    grid: &Grid1D,
    a: &SteadyState,
    b: &SteadyState,
) -> Result<SteadyState> {
    continue_to(f, grid, a, lerp(a.boundary, b.boundary, 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Grid1D;

    fn grid() -> Grid1D {
        Grid1D::new(20).unwrap()
    }

    #[test]
    fn integer_constants_are_sin_pi_steady() {
        let g = grid();
        for v in [1.0, 2.0] {
            let s = solve_steady(&Nonlinearity::SinPi, v, v, &g, &[v; 21]).unwrap();
            assert!(s.profile.iter().all(|y| (y - v).abs() < 1e-12));
            assert!(s.residual <= STEADY_TOL);
        }
    }

    #[test]
    fn harmonic_profile_is_linear() {
        let g = grid();
        let s = solve_steady(&Nonlinearity::Zero, 0.0, 1.0, &g, &[0.0; 21]).unwrap();
        for (j, y) in s.profile.iter().enumerate() {
            assert!((y - g.node(j)).abs() <= 1e-12);
        }
    }

    #[test]
    fn sin_pi_path_states_are_solutions() {
        let g = grid();
        let f = Nonlinearity::SinPi;
        let a = SteadyState::constant(&f, &g, 1.0).unwrap();
        let b = SteadyState::constant(&f, &g, 2.0).unwrap();
        let path = build_path(&f, &a, &b, 4, &g).unwrap();
        assert_eq!(path.states.len(), 5);
        for (k, s) in path.states.iter().enumerate() {
            let expect = 1.0 + 0.25 * k as f64;
            assert!((s.boundary.0 - expect).abs() < 1e-15);
            assert!(s.residual <= STEADY_TOL);
            if k > 0 && k < 4 {
                // f < 0 on (1, 2) makes the profile strictly concave
                assert!(s.profile[10] > expect + 1e-3);
            }
        }
        assert_eq!(path.nu, 1.0);
    }

    #[test]
    fn identical_endpoints_give_zero_gap() {
        let g = grid();
        let f = Nonlinearity::SinPi;
        let a = SteadyState::constant(&f, &g, 1.0).unwrap();
        let path = build_path(&f, &a, &a, 3, &g).unwrap();
        assert_eq!(path.max_gap(), 0.0);
    }

    #[test]
    fn linear_path_is_superposition() {
        let g = grid();
        let f = Nonlinearity::Zero;
        let a = solve_steady(&f, 0.0, 0.0, &g, &[0.0; 21]).unwrap();
        let b = solve_steady(&f, 0.0, 1.0, &g, &[0.0; 21]).unwrap();
        let path = build_path(&f, &a, &b, 5, &g).unwrap();
        for (k, s) in path.states.iter().enumerate() {
            let sk = k as f64 / 5.0;
            for (j, y) in s.profile.iter().enumerate() {
                assert!((y - sk * g.node(j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn supercritical_bratu_fails_to_converge() {
        // y'' = -10 e^y with zero data has no solution (the fold sits near 3.5)
        let g = grid();
        let knots: Vec<f64> = (0..=80).map(|k| -1.0 + 0.5 * k as f64).collect();
        let values = knots.iter().map(|y: &f64| -10.0 * y.exp()).collect();
        let f = Nonlinearity::Table(
            crate::nonlinearity::TableNonlinearity::new(knots, values).unwrap(),
        );
        let err = solve_steady(&f, 0.0, 0.0, &g, &[0.0; 21]).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }), "{err}");
    }

    #[test]
    fn mismatched_guess_rejected() {
        let g = grid();
        assert!(solve_steady(&Nonlinearity::Zero, 0.0, 1.0, &g, &[0.0; 5]).is_err());
    }
}

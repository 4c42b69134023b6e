//! Backward adjoint of the explicit scheme.
//!
//! The adjoint here is the algebraic transpose of one forward step,
//! `phi_i = (I + r L - dt diag(c_i))^T phi_{i+1}` on interior nodes with
//! homogeneous Dirichlet values, so the discrete duality identity
//!
//! ```text
//! <Y_nt, phi_T>_dx = <Y_0, phi_0>_dx + sum_i dt * (phi_{i+1,1} u0_i + phi_{i+1,nx-1} u1_i) / dx
//! ```
//!
//! holds to round-off for any potential `c`. The continuous duality identity
//! is then a convergence check on top of it.

use serde::{Deserialize, Serialize};

use crate::control::BoundaryControl;
use crate::error::{invalid, Error, Result};
use crate::export::csv_table;
use crate::fdsolver::{self, simulate};
use crate::mesh::{Grid1D, TimeGrid};
use crate::nonlinearity::Nonlinearity;
use crate::trajectory::Trajectory;

/// Zeroth-order coefficient `c(t_i, x_j)` of the (linearized) operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    Constant(f64),
    /// Row-major `nt x (nx + 1)` values, one row per forward step.
    Sampled(Vec<f64>),
}

impl Potential {
    pub fn zero() -> Self {
        Potential::Constant(0.0)
    }

    /// Potential of a linear reaction term. Nonlinear terms need a trajectory.
    pub fn of_linear(f: &Nonlinearity) -> Option<Self> {
        match f {
            Nonlinearity::Zero => Some(Potential::Constant(0.0)),
            Nonlinearity::LinearPotential(c) => Some(Potential::Constant(*c)),
            _ => None,
        }
    }

    /// `df/dy` sampled along `traj`; the frozen-coefficient linearization.
    pub fn linearized(f: &Nonlinearity, traj: &Trajectory) -> Self {
        if let Some(p) = Self::of_linear(f) {
            return p;
        }
        let grid = traj.grid();
        let tgrid = traj.tgrid();
        let n = grid.len();
        let steps = traj.rows() - 1;
        let mut c = Vec::with_capacity(steps * n);
        for i in 0..steps {
            let t = tgrid.time(i);
            let row = traj.row(i);
            c.extend((0..n).map(|j| f.deriv(t, grid.node(j), row[j])));
        }
        Potential::Sampled(c)
    }

    #[inline]
    fn at(&self, i: usize, j: usize, n: usize) -> f64 {
        match self {
            Potential::Constant(c) => *c,
            Potential::Sampled(v) => v[i * n + j],
        }
    }

    fn check(&self, grid: &Grid1D, tgrid: &TimeGrid) -> Result<()> {
        if let Potential::Sampled(v) = self {
            if v.len() != tgrid.nt() * grid.len() {
                return Err(Error::MeshMismatch(format!(
                    "sampled potential has {} entries, expected {}",
                    v.len(),
                    tgrid.nt() * grid.len()
                )));
            }
        }
        Ok(())
    }
}

/// Transposed step: writes `phi_i` (interior) from `phi_{i+1}`.
#[inline]
fn back_step(next: &[f64], prev: &mut [f64], i: usize, ratio: f64, dt: f64, potential: &Potential) {
    let n = next.len();
    let nx = n - 1;
    for j in 1..nx {
        let p = next[j];
        let lap = next[j + 1] - 2.0 * p + next[j - 1];
        prev[j] = p + ratio * lap - dt * potential.at(i, j, n) * p;
    }
    prev[0] = 0.0;
    prev[nx] = 0.0;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjointTrajectory {
    values: Vec<f64>,
    grid: Grid1D,
    tgrid: TimeGrid,
    final_datum: Vec<f64>,
    potential: Potential,
}

impl AdjointTrajectory {
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.len() + j]
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn tgrid(&self) -> &TimeGrid {
        &self.tgrid
    }

    pub fn final_datum(&self) -> &[f64] {
        &self.final_datum
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// Exact boundary couplings `kappa` of the discrete duality identity:
    /// `<Y_nt, phi_T>_dx = <Y_0, phi_0>_dx - sum_i dt (u0_i kappa0_i + u1_i kappa1_i)`.
    /// They approximate the outward normal derivative; `kappa_nt = 0`.
    pub fn boundary_couplings(&self) -> BoundaryFlux {
        let nt = self.tgrid.nt();
        let nx = self.grid.nx();
        let dx = self.grid.dx();
        let mut left = vec![0.0; nt + 1];
        let mut right = vec![0.0; nt + 1];
        for i in 0..nt {
            left[i] = -self.at(i + 1, 1) / dx;
            right[i] = -self.at(i + 1, nx - 1) / dx;
        }
        BoundaryFlux {
            times: self.tgrid.times(),
            left,
            right,
        }
    }
}

/// Outward normal derivative of the adjoint state on both boundaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFlux {
    pub times: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl BoundaryFlux {
    /// Largest positive part over both boundaries.
    pub fn max_positive(&self) -> f64 {
        self.left
            .iter()
            .chain(&self.right)
            .fold(0.0_f64, |m, v| m.max(*v))
    }

    /// CSV `t,flux_left,flux_right`.
    pub fn to_csv(&self) -> String {
        let rows: Vec<[f64; 3]> = (0..self.times.len())
            .map(|i| [self.times[i], self.left[i], self.right[i]])
            .collect();
        csv_table("t,flux_left,flux_right", rows.iter().map(|r| r.as_slice()))
    }
}

/// Tolerance on `|phi_T(0)|`, `|phi_T(1)|`; sampled sines are not exactly zero there.
const ENDPOINT_TOL: f64 = 1e-9;

/// Marches the transposed scheme backward from `phi_T` at `i = nt`.
pub fn solve_adjoint(
    phi_t: &[f64],
    potential: &Potential,
    grid: &Grid1D,
    tgrid: &TimeGrid,
) -> Result<AdjointTrajectory> {
    tgrid.check_cfl(grid)?;
    potential.check(grid, tgrid)?;
    let n = grid.len();
    if phi_t.len() != n {
        return Err(Error::MeshMismatch(format!(
            "final datum has {} samples, grid has {n} nodes",
            phi_t.len()
        )));
    }
    if phi_t[0].abs() > ENDPOINT_TOL || phi_t[n - 1].abs() > ENDPOINT_TOL {
        return Err(invalid("adjoint final datum must vanish at both endpoints"));
    }
    let nt = tgrid.nt();
    let (ratio, dt) = (tgrid.ratio(grid), tgrid.dt());

    let mut values = vec![0.0; (nt + 1) * n];
    {
        let last = &mut values[nt * n..];
        last.copy_from_slice(phi_t);
        last[0] = 0.0;
        last[n - 1] = 0.0;
    }
    for i in (0..nt).rev() {
        let (head, tail) = values.split_at_mut((i + 1) * n);
        back_step(&tail[..n], &mut head[i * n..], i, ratio, dt, potential);
    }
    let mut final_datum = phi_t.to_vec();
    final_datum[0] = 0.0;
    final_datum[n - 1] = 0.0;
    Ok(AdjointTrajectory {
        values,
        grid: *grid,
        tgrid: *tgrid,
        final_datum,
        potential: potential.clone(),
    })
}

/// One-sided three-point approximation of `d phi / d n` at `x = 0` and `x = 1`.
pub fn normal_derivative(adj: &AdjointTrajectory) -> BoundaryFlux {
    let nt = adj.tgrid.nt();
    let nx = adj.grid.nx();
    let two_dx = 2.0 * adj.grid.dx();
    let (left, right) = (0..=nt)
        .map(|i| {
            let r = adj.row(i);
            let dx0 = (-3.0 * r[0] + 4.0 * r[1] - r[2]) / two_dx;
            let dx1 = (3.0 * r[nx] - 4.0 * r[nx - 1] + r[nx - 2]) / two_dx;
            (-dx0, dx1)
        })
        .unzip();
    BoundaryFlux {
        times: adj.tgrid.times(),
        left,
        right,
    }
}

/// Quadrature of `<y(T), phi_T> + int_0^T int_{boundary} u dphi/dn`, which
/// vanishes for the continuous problem started from zero.
///
/// `u` is held piecewise constant; the flux is averaged over each step.
pub fn duality_residual(
    traj: &Trajectory,
    u: &BoundaryControl,
    phi_t: &[f64],
    potential: &Potential,
) -> Result<f64> {
    let grid = traj.grid();
    let tgrid = traj.tgrid();
    if !traj.is_complete() {
        return Err(Error::MeshMismatch("trajectory is truncated".into()));
    }
    if u.nt() != tgrid.nt() {
        return Err(Error::MeshMismatch(format!(
            "control covers {} steps, trajectory has {}",
            u.nt(),
            tgrid.nt()
        )));
    }
    if traj.row(0).iter().any(|v| *v != 0.0) {
        return Err(invalid("duality residual needs a zero initial datum"));
    }
    let adj = solve_adjoint(phi_t, potential, grid, tgrid)?;
    let flux = normal_derivative(&adj);
    let dt = tgrid.dt();
    let boundary: f64 = (0..tgrid.nt())
        .map(|i| {
            let fl = 0.5 * (flux.left[i] + flux.left[i + 1]);
            let fr = 0.5 * (flux.right[i] + flux.right[i + 1]);
            dt * (u.left()[i] * fl + u.right()[i] * fr)
        })
        .sum();
    Ok(grid.inner(traj.terminal(), adj.final_datum()) + boundary)
}

/// Terminal-tracking objective
/// `J(u) = 1/2 ||Y_nt(u) - target||^2_{L2,dx} + rho/2 ||u - u_ref||^2_{L2,dt}`.
#[derive(Clone, Debug)]
pub struct SteeringObjective<'a> {
    pub f: &'a Nonlinearity,
    pub grid: Grid1D,
    pub tgrid: TimeGrid,
    pub y_init: &'a [f64],
    pub target: &'a [f64],
    pub reference: &'a BoundaryControl,
    pub rho: f64,
}

#[derive(Clone, Debug)]
pub struct ObjectiveEval {
    pub value: f64,
    /// Relative trapezoid-`L^2` terminal gap.
    pub mismatch: f64,
    pub trajectory: Trajectory,
}

impl SteeringObjective<'_> {
    /// Forward run plus objective value; blow-up is an error here.
    pub fn evaluate(&self, u: &BoundaryControl) -> Result<ObjectiveEval> {
        let out = simulate(self.y_init, u, self.f, &self.grid, &self.tgrid)?;
        if let Some(step) = out.blowup_step {
            return Err(Error::BlowUp { step });
        }
        let terminal = out.trajectory.terminal();
        let gap = fdsolver::diff(terminal, self.target);
        let tracking = 0.5 * self.grid.inner(&gap, &gap);
        let value = tracking + self.penalty(u);
        Ok(ObjectiveEval {
            value,
            mismatch: fdsolver::relative_l2_gap(terminal, self.target),
            trajectory: out.trajectory,
        })
    }

    fn penalty(&self, u: &BoundaryControl) -> f64 {
        if self.rho == 0.0 {
            return 0.0;
        }
        let sq: f64 = u
            .left()
            .iter()
            .zip(self.reference.left())
            .chain(u.right().iter().zip(self.reference.right()))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        0.5 * self.rho * self.tgrid.dt() * sq
    }

    /// Exact gradient of `J` from the transposed recursion, given the forward
    /// trajectory of `u`. Entry `i = 0` is reported as if the first control
    /// sample moved the initial corner value with it.
    pub fn gradient(&self, u: &BoundaryControl, traj: &Trajectory) -> BoundaryControl {
        let grid = &self.grid;
        let nt = self.tgrid.nt();
        let nx = grid.nx();
        let (ratio, dt) = (self.tgrid.ratio(grid), self.tgrid.dt());
        let w = grid.trapezoid_weights();
        let terminal = traj.terminal();

        let mut p: Vec<f64> = (0..=nx)
            .map(|j| w[j] * (terminal[j] - self.target[j]))
            .collect();
        let mut left = vec![0.0; nt + 1];
        let mut right = vec![0.0; nt + 1];
        left[nt] = p[0];
        right[nt] = p[nx];
        p[0] = 0.0;
        p[nx] = 0.0;

        let potential = Potential::linearized(self.f, traj);
        let mut prev = vec![0.0; nx + 1];
        for i in (0..nt).rev() {
            left[i] = ratio * p[1];
            right[i] = ratio * p[nx - 1];
            back_step(&p, &mut prev, i, ratio, dt, &potential);
            std::mem::swap(&mut p, &mut prev);
        }
        if self.rho != 0.0 {
            let scale = self.rho * dt;
            for i in 0..=nt {
                left[i] += scale * (u.left()[i] - self.reference.left()[i]);
                right[i] += scale * (u.right()[i] - self.reference.right()[i]);
            }
        }
        BoundaryControl::new(left, right).expect("gradient has control shape")
    }
}

/// Value and gradient of the steering objective at `u`.
pub fn objective_gradient(
    u: &BoundaryControl,
    objective: &SteeringObjective<'_>,
) -> Result<(ObjectiveEval, BoundaryControl)> {
    let eval = objective.evaluate(u)?;
    let grad = objective.gradient(u, &eval.trajectory);
    Ok((eval, grad))
}

/// Sensitivities `d Y_nt[j] / d u` of every terminal node, linearized along
/// `traj`. Row `j` holds the flattened `[left..., right...]` derivative.
pub fn terminal_jacobian(f: &Nonlinearity, traj: &Trajectory) -> Vec<Vec<f64>> {
    let grid = traj.grid();
    let tgrid = traj.tgrid();
    let nt = tgrid.nt();
    let nx = grid.nx();
    let n = nx + 1;
    let (ratio, dt) = (tgrid.ratio(grid), tgrid.dt());
    let potential = Potential::linearized(f, traj);
    let m = 2 * (nt + 1);

    let mut jac = vec![vec![0.0; m]; n];
    jac[0][nt] = 1.0;
    jac[nx][m - 1] = 1.0;

    // all interior adjoints marched together: block[j] is the adjoint for e_j
    let mut block: Vec<Vec<f64>> = (1..nx)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let mut scratch = vec![0.0; n];
    for i in (0..nt).rev() {
        for (k, p) in block.iter_mut().enumerate() {
            let row = &mut jac[k + 1];
            row[i] = ratio * p[1];
            row[nt + 1 + i] = ratio * p[nx - 1];
            back_step(p, &mut scratch, i, ratio, dt, &potential);
            std::mem::swap(p, &mut scratch);
        }
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_meshes;
    use std::f64::consts::PI;

    fn sine(grid: &Grid1D, k: f64) -> Vec<f64> {
        let mut v = grid.sample(|x| (k * PI * x).sin());
        let nx = grid.nx();
        v[0] = 0.0;
        v[nx] = 0.0;
        v
    }

    #[test]
    fn single_mode_decays_backward() {
        let m = make_meshes(40, 0.1, 400).unwrap();
        let adj =
            solve_adjoint(&sine(&m.grid, 1.0), &Potential::zero(), &m.grid, &m.tgrid).unwrap();
        let t_end = m.tgrid.horizon();
        for i in (0..=400).step_by(40) {
            let decay = (-PI * PI * (t_end - m.tgrid.time(i))).exp();
            for j in 0..=40 {
                let exact = decay * (PI * m.grid.node(j)).sin();
                assert!((adj.at(i, j) - exact).abs() <= 5e-3);
            }
        }
    }

    #[test]
    fn zero_datum_gives_zero_adjoint() {
        let m = make_meshes(20, 0.1, 200).unwrap();
        let adj = solve_adjoint(&[0.0; 21], &Potential::Constant(2.0), &m.grid, &m.tgrid).unwrap();
        assert!(adj.values.iter().all(|v| *v == 0.0));
        let flux = normal_derivative(&adj);
        assert!(flux.left.iter().chain(&flux.right).all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_nonvanishing_endpoints() {
        let m = make_meshes(20, 0.1, 200).unwrap();
        assert!(solve_adjoint(&[1.0; 21], &Potential::zero(), &m.grid, &m.tgrid).is_err());
    }

    #[test]
    fn normal_derivative_of_sine() {
        let m = make_meshes(40, 1e-6, 1).unwrap();
        let adj =
            solve_adjoint(&sine(&m.grid, 1.0), &Potential::zero(), &m.grid, &m.tgrid).unwrap();
        let flux = normal_derivative(&adj);
        let dx2 = m.grid.dx() * m.grid.dx();
        // leading truncation term of the one-sided stencil is pi^3 dx^2 / 3
        let lead = PI.powi(3) / 3.0 * dx2;
        assert!((flux.left[1] + PI).abs() <= 1.01 * lead);
        assert!((flux.right[1] + PI).abs() <= 1.01 * lead);
    }

    #[test]
    fn certificate_flux_matches_fourier() {
        // phi_T = -sin(pi x) + sin(3 pi x)
        let m = make_meshes(40, 0.05, 200).unwrap();
        let (alpha, beta) = (1.0, 1.0);
        let mut phi = m
            .grid
            .sample(|x| -alpha * (PI * x).sin() + beta * (3.0 * PI * x).sin());
        phi[0] = 0.0;
        phi[40] = 0.0;
        let adj = solve_adjoint(&phi, &Potential::zero(), &m.grid, &m.tgrid).unwrap();
        let flux = normal_derivative(&adj);
        for i in 0..=200 {
            let s = m.tgrid.horizon() - m.tgrid.time(i);
            let exact =
                alpha * PI * (-PI * PI * s).exp() - 3.0 * PI * beta * (-9.0 * PI * PI * s).exp();
            let scale =
                alpha * PI * (-PI * PI * s).exp() + 3.0 * PI * beta * (-9.0 * PI * PI * s).exp();
            assert!(
                (flux.left[i] - exact).abs() <= 0.02 * scale,
                "i={i} {} vs {exact}",
                flux.left[i]
            );
        }
    }

    #[test]
    fn duality_residual_vanishes_without_control() {
        let m = make_meshes(20, 0.1, 200).unwrap();
        let u = BoundaryControl::zeros(200);
        let out = simulate(&[0.0; 21], &u, &Nonlinearity::Zero, &m.grid, &m.tgrid).unwrap();
        let r =
            duality_residual(&out.trajectory, &u, &sine(&m.grid, 1.0), &Potential::zero()).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn jacobian_matches_gradient_contraction() {
        let m = make_meshes(10, 0.05, 200).unwrap();
        let y0 = vec![1.0; 11];
        let u = BoundaryControl::from_fn(&m.tgrid, |t| (1.0 + 3.0 * t, 1.0 + t)).unwrap();
        let traj = simulate(&y0, &u, &Nonlinearity::SinPi, &m.grid, &m.tgrid)
            .unwrap()
            .trajectory;
        let target = vec![2.0; 11];
        let obj = SteeringObjective {
            f: &Nonlinearity::SinPi,
            grid: m.grid,
            tgrid: m.tgrid,
            y_init: &y0,
            target: &target,
            reference: &u,
            rho: 0.0,
        };
        let g = obj.gradient(&u, &traj).to_flat();
        let jac = terminal_jacobian(&Nonlinearity::SinPi, &traj);
        let w = m.grid.trapezoid_weights();
        let e: Vec<f64> = traj
            .terminal()
            .iter()
            .zip(&target)
            .map(|(a, b)| a - b)
            .collect();
        for c in 0..g.len() {
            let jt: f64 = (0..11).map(|j| jac[j][c] * w[j] * e[j]).sum();
            assert!((jt - g[c]).abs() <= 1e-12 * (1.0 + g[c].abs()), "col {c}");
        }
    }
}

//! Lower bounds on the minimal controllability time under nonnegative
//! controls, obtained from adjoint final data
//! `phi_T = -alpha sin(pi x) + beta sin(3 pi x)` whose boundary flux stays
//! nonpositive while pairing negatively with the target gap.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::adjoint::{normal_derivative, solve_adjoint, BoundaryFlux, Potential};
use crate::control::BoundaryControl;
use crate::error::{invalid, Result};
use crate::fdsolver::{simulate, BLOWUP_CAP};
use crate::mesh::{Grid1D, TimeGrid};
use crate::nonlinearity::Nonlinearity;

const EIGHT_PI_SQ: f64 = 8.0 * PI * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundCase {
    /// `0 < y0 < y1`.
    Increasing,
    /// `y0 >= y1 > 0`.
    Decreasing,
}

/// Two-mode adjoint certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub alpha: f64,
    pub beta: f64,
    /// Flux window: the boundary flux is nonpositive on `[0, T]` for every `T <= t0`.
    pub t0: f64,
    /// Largest horizon up to which the pairing stays strictly negative
    /// (`None` when it is negative for every horizon).
    pub pairing_ok_until: Option<f64>,
    pub valid: bool,
}

impl Certificate {
    /// Flux window `log(3 beta / alpha) / (8 pi^2)`, zero when `beta <= alpha / 3`.
    pub fn window(alpha: f64, beta: f64) -> f64 {
        if alpha > 0.0 && 3.0 * beta > alpha {
            (3.0 * beta / alpha).ln() / EIGHT_PI_SQ
        } else if alpha == 0.0 && beta > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }

    /// Evaluates the certificate for steering the constant `y0` to `y1`.
    pub fn new(alpha: f64, beta: f64, y0: f64, y1: f64) -> Self {
        let t0 = Self::window(alpha, beta);
        let pairing_ok_until = pairing_negative_until(alpha, beta, y0, y1);
        // the flux is nonpositive on [0, t0] exactly when 3 beta >= alpha
        let flux_ok = alpha > 0.0 && 3.0 * beta >= alpha;
        let pairing_ok = pairing_ok_until.is_none_or(|t| t >= t0);
        Self {
            alpha,
            beta,
            t0,
            pairing_ok_until,
            valid: beta >= 0.0 && flux_ok && pairing_ok,
        }
    }

    /// Lower bound the certificate proves: its window when valid, else 0.
    pub fn bound(&self) -> f64 {
        if self.valid {
            self.t0
        } else {
            0.0
        }
    }

    pub fn vacuous() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            t0: 0.0,
            pairing_ok_until: Some(0.0),
            valid: false,
        }
    }

    /// Node samples of the final datum (exactly zero at the endpoints).
    pub fn final_datum(&self, grid: &Grid1D) -> Vec<f64> {
        let mut v =
            grid.sample(|x| -self.alpha * (PI * x).sin() + self.beta * (3.0 * PI * x).sin());
        let nx = grid.nx();
        v[0] = 0.0;
        v[nx] = 0.0;
        v
    }

    /// Analytic outward flux at both ends, `time_to_go = T - t`.
    pub fn flux(&self, time_to_go: f64) -> f64 {
        self.alpha * PI * (-PI * PI * time_to_go).exp()
            - 3.0 * PI * self.beta * (-9.0 * PI * PI * time_to_go).exp()
    }
}

/// `<y1 - z(T), phi_T>` for constant data, `z` the free solution from `y0`.
pub fn pairing_value(alpha: f64, beta: f64, y0: f64, y1: f64, t: f64) -> f64 {
    y1 * (-2.0 * alpha / PI + 2.0 * beta / (3.0 * PI))
        + y0 * ((2.0 / PI) * alpha * (-PI * PI * t).exp()
            - (2.0 / (3.0 * PI)) * beta * (-9.0 * PI * PI * t).exp())
}

/// First horizon where the pairing stops being strictly negative.
///
/// As a function of `T` the pairing increases on `[0, t0]` and then decays
/// monotonically to its limit `y1 (2 alpha / pi) (beta / (3 alpha) - 1)`, so a
/// single bisection on `[0, t0]` locates the crossing.
fn pairing_negative_until(alpha: f64, beta: f64, y0: f64, y1: f64) -> Option<f64> {
    let p = |t: f64| pairing_value(alpha, beta, y0, y1, t);
    if p(0.0) >= 0.0 {
        return Some(0.0);
    }
    let peak = Certificate::window(alpha, beta);
    if !peak.is_finite() || p(peak) < 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0, peak);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * peak.max(1e-300) {
            break;
        }
    }
    Some(hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub case: BoundCase,
    pub y0: f64,
    pub y1: f64,
    pub bound: f64,
    /// Coefficients of `phi_T = -alpha sin(pi x) + beta sin(3 pi x)`.
    /// The decreasing case uses `phi_T = sin(pi x)`, i.e. `alpha = -1`.
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "T0")]
    pub t0: f64,
}

fn check_positive(y0: f64, y1: f64) -> Result<()> {
    if !(y0 > 0.0 && y1 > 0.0 && y0.is_finite() && y1.is_finite()) {
        return Err(invalid(format!(
            "constant data must be positive and finite, got y0={y0}, y1={y1}"
        )));
    }
    Ok(())
}

/// `T_min >= log(9 (y1 - y0) / y1) / (8 pi^2)`, clamped at 0.
pub fn lower_bound_increasing(y0: f64, y1: f64) -> Result<BoundResult> {
    check_positive(y0, y1)?;
    if y0 >= y1 {
        return Err(invalid(format!(
            "increasing case needs y0 < y1, got {y0} >= {y1}"
        )));
    }
    let ratio = 3.0 * (y1 - y0) / y1;
    let bound = ((9.0 * (y1 - y0) / y1).ln() / EIGHT_PI_SQ).max(0.0);
    Ok(BoundResult {
        case: BoundCase::Increasing,
        y0,
        y1,
        bound,
        alpha: 1.0,
        beta: ratio,
        t0: bound,
    })
}

/// `T_min >= log(y0 / y1) / pi^2` from `phi_T = sin(pi x)`.
pub fn lower_bound_decreasing(y0: f64, y1: f64) -> Result<BoundResult> {
    check_positive(y0, y1)?;
    if y0 < y1 {
        return Err(invalid(format!(
            "decreasing case needs y0 >= y1, got {y0} < {y1}"
        )));
    }
    let bound = (y0 / y1).ln() / (PI * PI);
    Ok(BoundResult {
        case: BoundCase::Decreasing,
        y0,
        y1,
        bound,
        alpha: -1.0,
        beta: 0.0,
        t0: bound,
    })
}

/// Dispatches on the ordering of `y0` and `y1`.
pub fn lower_bound(y0: f64, y1: f64) -> Result<BoundResult> {
    if y0 < y1 {
        lower_bound_increasing(y0, y1)
    } else {
        lower_bound_decreasing(y0, y1)
    }
}

/// Best certificate over the ratios `beta / alpha` (with `alpha = 1`) that keep
/// the pairing negative, i.e. `r < 3 (y1 - y0) / y1`.
pub fn certificate_search(y0: f64, y1: f64, ratios: &[f64]) -> Result<Certificate> {
    check_positive(y0, y1)?;
    if y0 >= y1 {
        return Err(invalid(
            "certificate search covers the increasing case only",
        ));
    }
    let limit = 3.0 * (y1 - y0) / y1;
    let best = ratios
        .iter()
        .copied()
        .filter(|r| *r > 0.0 && *r < limit)
        .map(|r| Certificate::new(1.0, r, y0, y1))
        .filter(|c| c.valid && c.t0 > 0.0)
        .fold(None::<Certificate>, |best, c| match best {
            Some(b) if b.t0 >= c.t0 => Some(b),
            _ => Some(c),
        });
    Ok(best.unwrap_or_else(Certificate::vacuous))
}

/// Evenly spaced ratios `start, start + step, ... <= stop`.
pub fn ratio_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

/// Discrete verification of a certificate on a concrete mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    /// Largest positive flux on both boundaries over `[0, T]`.
    pub max_flux: f64,
    /// Closed-form pairing at the mesh horizon.
    pub pairing: f64,
    /// `<y1 - Z_nt, phi_T>_dx` with `Z` the discrete free solution.
    pub discrete_pairing: f64,
}

pub fn verify_certificate(
    cert: &Certificate,
    y0: f64,
    y1: f64,
    grid: &Grid1D,
    tgrid: &TimeGrid,
) -> Result<CertificateCheck> {
    let phi = cert.final_datum(grid);
    let adj = solve_adjoint(&phi, &Potential::zero(), grid, tgrid)?;
    let flux = normal_derivative(&adj);
    let max_flux = flux.max_positive();

    let z0 = vec![y0; grid.len()];
    let free = BoundaryControl::constant(tgrid.nt(), y0, y0);
    let z = simulate(&z0, &free, &Nonlinearity::Zero, grid, tgrid)?;
    let gap: Vec<f64> = z.trajectory.terminal().iter().map(|v| y1 - v).collect();
    Ok(CertificateCheck {
        max_flux,
        pairing: pairing_value(cert.alpha, cert.beta, y0, y1, tgrid.horizon()),
        discrete_pairing: grid.inner(&gap, &phi),
    })
}

/// Time at which the left flux turns nonpositive for good (scanning forward).
pub fn flux_sign_flip(flux: &BoundaryFlux) -> Option<f64> {
    let last_positive = flux.left.iter().rposition(|v| *v > 0.0)?;
    flux.times.get(last_positive + 1).copied()
}

/// Growth factor `exp((lambda - pi^2) T)` of the first mode of
/// `y_t - y_xx - lambda y = 0`, which no nonnegative control can undercut.
pub fn nondissipative_envelope(lambda: f64, t: f64) -> Result<f64> {
    let pi_sq = PI * PI;
    if !(lambda > pi_sq) {
        return Err(invalid(format!(
            "envelope needs lambda > pi^2, got {lambda}"
        )));
    }
    let k = (lambda / pi_sq).sqrt().round();
    if k >= 2.0 && (lambda - k * k * pi_sq).abs() <= 1e-12 * lambda {
        return Err(invalid("lambda must not be a Dirichlet eigenvalue"));
    }
    if t < 0.0 {
        return Err(invalid("horizon must be nonnegative"));
    }
    Ok(((lambda - pi_sq) * t).exp())
}

/// `<Y(T), sin(pi x)>_dx` for `y_t - y_xx - lambda y = 0` from `y0 = sin(pi x)`
/// under control `u` (needs `u_0 = 0`). `None` on blow-up.
pub fn first_mode_after(
    lambda: f64,
    u: &BoundaryControl,
    grid: &Grid1D,
    tgrid: &TimeGrid,
) -> Result<Option<f64>> {
    let mut y0 = grid.sample(|x| (PI * x).sin());
    let nx = grid.nx();
    y0[0] = 0.0;
    y0[nx] = 0.0;
    let out = simulate(&y0, u, &Nonlinearity::LinearPotential(-lambda), grid, tgrid)?;
    if out.blew_up || out.sup_norm_history.iter().any(|s| *s > BLOWUP_CAP) {
        return Ok(None);
    }
    Ok(Some(grid.inner(out.trajectory.terminal(), &y0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increasing_reference_value() {
        let b = lower_bound_increasing(1.0, 5.0).unwrap();
        assert!((b.bound - 0.0250020).abs() < 1e-6, "{}", b.bound);
        assert!((b.bound - (36.0_f64 / 5.0).ln() / (8.0 * PI * PI)).abs() < 1e-15);
        assert!((b.beta - 2.4).abs() < 1e-12);
    }

    #[test]
    fn decreasing_reference_value() {
        let b = lower_bound_decreasing(5.0, 1.0).unwrap();
        assert!((b.bound - 0.1630702).abs() < 1e-6, "{}", b.bound);
        assert_eq!(lower_bound_decreasing(2.0, 2.0).unwrap().bound, 0.0);
        let y1 = 0.3;
        let b = lower_bound_decreasing((PI * PI).exp() * y1, y1).unwrap();
        assert!((b.bound - 1.0).abs() < 1e-14);
    }

    #[test]
    fn vacuous_increasing_bound_clamps() {
        // 9 (y1 - y0) = y1 at y1 = 9/8
        let b = lower_bound_increasing(1.0, 9.0 / 8.0).unwrap();
        assert!(b.bound.abs() < 1e-15);
        assert_eq!(lower_bound_increasing(1.0, 1.01).unwrap().bound, 0.0);
    }

    #[test]
    fn bound_rejects_bad_orderings() {
        assert!(lower_bound_increasing(5.0, 1.0).is_err());
        assert!(lower_bound_decreasing(1.0, 5.0).is_err());
        assert!(lower_bound_increasing(0.0, 5.0).is_err());
    }

    #[test]
    fn increasing_bound_monotone_in_target() {
        let mut prev = 0.0;
        for k in 1..200 {
            let y1 = 1.0 + 0.05 * k as f64;
            let b = lower_bound_increasing(1.0, y1).unwrap().bound;
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn pairing_cancels_at_time_zero_for_single_mode() {
        assert!(pairing_value(1.0, 0.0, 2.0, 2.0, 0.0).abs() < 1e-15);
    }

    #[test]
    fn pairing_negative_below_ratio_threshold() {
        let (y0, y1) = (1.0, 5.0);
        let limit = 3.0 * (y1 - y0) / y1;
        for r in [0.05, 0.5, 1.0, 2.0, 2.39, limit] {
            for k in 0..400 {
                let t = k as f64 * 5e-3;
                assert!(pairing_value(1.0, r, y0, y1, t) < 0.0, "r={r} t={t}");
            }
        }
        // at T = 0 the sign is that of beta / 3 - alpha
        assert!(pairing_value(1.0, 3.5, 1.0, 1.2, 0.0) > 0.0);
        assert!(pairing_value(1.0, 2.9, 1.0, 1.2, 0.0) < 0.0);
    }

    #[test]
    fn certificate_window_and_validity() {
        let c = Certificate::new(1.0, 1.0, 1.0, 5.0);
        assert!(c.valid);
        assert!((c.t0 - 3.0_f64.ln() / (8.0 * PI * PI)).abs() < 1e-15);
        assert_eq!(c.pairing_ok_until, None);
        assert_eq!(Certificate::window(1.0, 1.0 / 3.0), 0.0);
        // flux at T - t = t0 changes sign
        assert!(c.flux(c.t0).abs() < 1e-12);
        assert!(c.flux(0.5 * c.t0) < 0.0 && c.flux(2.0 * c.t0) > 0.0);
    }

    #[test]
    fn search_approaches_closed_form() {
        let grid = ratio_grid(0.1, 2.39, 1e-3);
        let c = certificate_search(1.0, 5.0, &grid).unwrap();
        let closed = lower_bound_increasing(1.0, 5.0).unwrap().bound;
        assert!(c.valid);
        assert!(c.bound() <= closed + 1e-15);
        assert!((c.bound() - 0.0250020).abs() < 1e-3);
        assert!((c.bound() - closed).abs() < 1e-3);
    }

    #[test]
    fn search_with_tiny_gap_is_vacuous() {
        let grid = ratio_grid(1e-3, 3.0, 1e-3);
        let c = certificate_search(1.0, 1.01, &grid).unwrap();
        assert_eq!(c.bound(), 0.0);
        assert!(!c.valid);
    }

    #[test]
    fn envelope_values() {
        let e = nondissipative_envelope(2.0 * PI * PI, 0.2).unwrap();
        assert!((e - (PI * PI * 0.2).exp()).abs() < 1e-12);
        assert!((e - 7.198847042533321).abs() < 1e-12);
        let near = nondissipative_envelope(PI * PI * (1.0 + 1e-12), 3.0).unwrap();
        assert!((near - 1.0).abs() < 1e-9);
        assert!(nondissipative_envelope(PI * PI, 1.0).is_err());
        assert!(nondissipative_envelope(4.0 * PI * PI, 1.0).is_err());
    }
}

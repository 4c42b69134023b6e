//! Explicit Euler / three-point finite-difference solver for
//! `y_t - y_xx + f(t, x, y) = 0` on `(0, 1)` with Dirichlet boundary controls,
//! plus the Fourier-series reference solution of the free problem.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::control::BoundaryControl;
use crate::error::{invalid, Error, Result};
use crate::mesh::{steps_for, Grid1D, TimeGrid};
use crate::nonlinearity::Nonlinearity;
use crate::trajectory::Trajectory;

/// Any `|Y| > BLOWUP_CAP` stops the simulation.
pub const BLOWUP_CAP: f64 = 1e6;

/// Tolerance on `|y0(0) - u0_0|` and `|y0(1) - u1_0|`.
pub const COMPATIBILITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub trajectory: Trajectory,
    pub blew_up: bool,
    pub blowup_step: Option<usize>,
    pub sup_norm_history: Vec<f64>,
}

/// Checks the corner values of `y0` against the first control sample.
pub fn check_compatible(y0: &[f64], u: &BoundaryControl) -> Result<()> {
    let n = y0.len() - 1;
    let dl = (y0[0] - u.left()[0]).abs();
    let dr = (y0[n] - u.right()[0]).abs();
    if dl > COMPATIBILITY_TOL || dr > COMPATIBILITY_TOL {
        return Err(Error::IncompatibleData(format!(
            "initial datum endpoints ({}, {}) differ from first control samples ({}, {})",
            y0[0],
            y0[n],
            u.left()[0],
            u.right()[0]
        )));
    }
    Ok(())
}

pub(crate) fn validate_inputs(
    y0: &[f64],
    u: &BoundaryControl,
    grid: &Grid1D,
    tgrid: &TimeGrid,
) -> Result<()> {
    tgrid.check_cfl(grid)?;
    if y0.len() != grid.len() {
        return Err(Error::MeshMismatch(format!(
            "initial datum has {} samples, grid has {} nodes",
            y0.len(),
            grid.len()
        )));
    }
    if u.nt() != tgrid.nt() {
        return Err(Error::MeshMismatch(format!(
            "control covers {} steps, time grid has {}",
            u.nt(),
            tgrid.nt()
        )));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(invalid("initial datum must be finite"));
    }
    check_compatible(y0, u)
}

/// One explicit step: writes row `i + 1` from row `i`.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn step(
    prev: &[f64],
    next: &mut [f64],
    t: f64,
    grid: &Grid1D,
    ratio: f64,
    dt: f64,
    f: &Nonlinearity,
    boundary: (f64, f64),
) {
    let nx = grid.nx();
    for j in 1..nx {
        let y = prev[j];
        let lap = prev[j + 1] - 2.0 * y + prev[j - 1];
        next[j] = y + ratio * lap - dt * f.eval(t, grid.node(j), y);
    }
    next[0] = boundary.0;
    next[nx] = boundary.1;
}

/// Runs the explicit scheme from `y0` under control `u`.
///
/// Blow-up is reported in the outcome, not raised: the trajectory is
/// truncated after the first row with an entry above [`BLOWUP_CAP`].
pub fn simulate(
    y0: &[f64],
    u: &BoundaryControl,
    f: &Nonlinearity,
    grid: &Grid1D,
    tgrid: &TimeGrid,
) -> Result<SimOutcome> {
    validate_inputs(y0, u, grid, tgrid)?;
    let n = grid.len();
    let nt = tgrid.nt();
    let (ratio, dt) = (tgrid.ratio(grid), tgrid.dt());

    let mut values = Vec::with_capacity((nt + 1) * n);
    values.extend_from_slice(y0);
    let mut sup_norm_history = Vec::with_capacity(nt + 1);
    sup_norm_history.push(sup_norm(y0));
    let mut blowup_step = None;

    let mut next = vec![0.0; n];
    for i in 0..nt {
        let prev = &values[i * n..(i + 1) * n];
        step(
            prev,
            &mut next,
            tgrid.time(i),
            grid,
            ratio,
            dt,
            f,
            (u.left()[i + 1], u.right()[i + 1]),
        );
        values.extend_from_slice(&next);
        let sup = sup_norm(&next);
        sup_norm_history.push(sup);
        if !(sup <= BLOWUP_CAP) {
            blowup_step = Some(i + 1);
            break;
        }
    }

    Ok(SimOutcome {
        trajectory: Trajectory::from_rows(values, *grid, *tgrid),
        blew_up: blowup_step.is_some(),
        blowup_step,
        sup_norm_history,
    })
}

/// Largest defect of the discrete update identity over a stored trajectory.
pub fn update_residual(traj: &Trajectory, u: &BoundaryControl, f: &Nonlinearity) -> f64 {
    let grid = traj.grid();
    let tgrid = traj.tgrid();
    let (ratio, dt) = (tgrid.ratio(grid), tgrid.dt());
    let mut next = vec![0.0; grid.len()];
    let mut worst: f64 = 0.0;
    for i in 0..traj.rows() - 1 {
        step(
            traj.row(i),
            &mut next,
            tgrid.time(i),
            grid,
            ratio,
            dt,
            f,
            (u.left()[i + 1], u.right()[i + 1]),
        );
        for (a, b) in next.iter().zip(traj.row(i + 1)) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Partial sum with `terms` odd modes of the free heat solution started from
/// the constant `y0_const` with homogeneous boundary values:
/// `z(t,x) = 4 y0 sum_p exp(-pi^2 (2p+1)^2 t) sin((2p+1) pi x) / ((2p+1) pi)`.
pub fn fourier_free_heat(y0_const: f64, t: f64, x: f64, terms: usize) -> f64 {
    let s: f64 = (0..terms)
        .map(|p| {
            let k = (2 * p + 1) as f64;
            (-PI * PI * k * k * t).exp() * (k * PI * x).sin() / (k * PI)
        })
        .sum();
    4.0 * y0_const * s
}

/// `int_0^1 z(T,x) (-alpha sin(pi x) + beta sin(3 pi x)) dx` in closed form.
pub fn fourier_pairing(y0_const: f64, t: f64, alpha: f64, beta: f64) -> f64 {
    y0_const
        * (-(2.0 / PI) * alpha * (-PI * PI * t).exp()
            + (2.0 / (3.0 * PI)) * beta * (-9.0 * PI * PI * t).exp())
}

/// Constant datum with homogeneous corners, i.e. the node samples of the
/// `L^2` function seen by the Fourier series.
pub fn constant_with_zero_corners(grid: &Grid1D, value: f64) -> Vec<f64> {
    let mut v = vec![value; grid.len()];
    v[0] = 0.0;
    v[grid.nx()] = 0.0;
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    pub sup: f64,
}

/// Trapezoid `L^2(0,1)` norm and max-norm of a node vector.
pub fn norms(v: &[f64]) -> Result<Norms> {
    if v.len() < 2 {
        return Err(invalid("norms need at least two samples"));
    }
    Ok(Norms {
        l2: l2_norm(v),
        sup: sup_norm(v),
    })
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    let n = v.len() - 1;
    let dx = 1.0 / n as f64;
    let interior: f64 = v[1..n].iter().map(|a| a * a).sum();
    (dx * (interior + 0.5 * (v[0] * v[0] + v[n] * v[n]))).sqrt()
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, a| {
        if a.abs() > m || a.is_nan() {
            a.abs()
        } else {
            m
        }
    })
}

pub(crate) fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Relative trapezoid-`L^2` gap `||a - b|| / ||b||` (absolute when `b = 0`).
pub fn relative_l2_gap(a: &[f64], b: &[f64]) -> f64 {
    let gap = l2_norm(&diff(a, b));
    let scale = l2_norm(b);
    if scale > 0.0 {
        gap / scale
    } else {
        gap
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingFit {
    /// Least-squares slope of `log ||Y(t)||_inf` against `log t`.
    pub exponent: f64,
    pub times: Vec<f64>,
    pub sup_norms: Vec<f64>,
}

/// Free evolution (`f = 0`, `u = 0`) of `y0`, sampled at `t_samples`, with a
/// power-law fit of the max-norm decay.
pub fn smoothing_check(
    y0: &[f64],
    grid: &Grid1D,
    dt_max: f64,
    t_samples: &[f64],
) -> Result<SmoothingFit> {
    if t_samples.len() < 3 {
        return Err(invalid("smoothing fit needs at least three sample times"));
    }
    let t_min = t_samples.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = t_samples.iter().copied().fold(0.0, f64::max);
    if !(t_min > 0.0) || t_max < 10.0 * t_min {
        return Err(invalid("sample times must be positive and span a decade"));
    }
    let nt = steps_for(t_max, dt_max);
    let tgrid = TimeGrid::new(t_max, nt)?;
    if t_min < 10.0 * tgrid.dt() {
        return Err(invalid("sample times must be at least 10 time steps"));
    }
    let u = BoundaryControl::zeros(nt);
    let out = simulate(y0, &u, &Nonlinearity::Zero, grid, &tgrid)?;

    let mut times = Vec::with_capacity(t_samples.len());
    let mut sup_norms = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        let i = ((t / tgrid.dt()).round() as usize).min(nt);
        let sup = out.sup_norm_history[i];
        if !(sup > f64::MIN_POSITIVE) {
            return Err(Error::DegenerateFit(format!(
                "max-norm underflowed at t = {t:e}"
            )));
        }
        times.push(tgrid.time(i));
        sup_norms.push(sup);
    }

    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = sup_norms.iter().map(|s| s.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(SmoothingFit {
        exponent: sxy / sxx,
        times,
        sup_norms,
    })
}

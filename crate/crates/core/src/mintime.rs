//! Minimal controllability time under nonnegative controls, estimated by
//! bisection on the horizon with a fixed-horizon feasibility solve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::lower_bound;
use crate::control::BoundaryControl;
use crate::error::{invalid, Error, Result};
use crate::export::{csv_table, fmt17};
use crate::fdsolver::relative_l2_gap;
use crate::mesh::{steps_for, Grid1D, TimeGrid};
use crate::nonlinearity::Nonlinearity;
use crate::synth::{local_steer, pinned_guess, SteerOptions, SteerProblem, SteerResult};

/// Spatial profile given either as a constant or as node samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Constant(f64),
    Nodes(Vec<f64>),
}

impl Profile {
    pub fn sample(&self, grid: &Grid1D) -> Result<Vec<f64>> {
        match self {
            Profile::Constant(v) => Ok(vec![*v; grid.len()]),
            Profile::Nodes(v) if v.len() == grid.len() => Ok(v.clone()),
            Profile::Nodes(v) => Err(Error::MeshMismatch(format!(
                "profile has {} samples, grid has {} nodes",
                v.len(),
                grid.len()
            ))),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Profile::Constant(v) => Some(*v),
            Profile::Nodes(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinTimeProblem {
    pub f: Nonlinearity,
    pub y0: Profile,
    /// Steady target; its corner values form the reference control.
    pub target: Profile,
    pub nx: usize,
    /// Time steps per unit horizon, raised where needed to meet the CFL bound.
    pub nt_per_unit: f64,
    pub bracket: (f64, f64),
    pub seed: u64,
    /// Random nonnegative restarts next to the warm start.
    pub restarts: usize,
    pub steer: SteerOptions,
}

impl MinTimeProblem {
    pub fn new(f: Nonlinearity, y0: Profile, target: Profile, nx: usize) -> Self {
        Self {
            f,
            y0,
            target,
            nx,
            nt_per_unit: 4000.0,
            bracket: (0.0, 0.2),
            seed: 0,
            restarts: 2,
            steer: SteerOptions::default(),
        }
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.nx)
    }

    pub fn time_grid(&self, horizon: f64) -> Result<TimeGrid> {
        let grid = self.grid()?;
        let by_policy = (horizon * self.nt_per_unit).ceil().max(1.0) as usize;
        let by_cfl = steps_for(horizon, 0.5 * grid.dx() * grid.dx());
        TimeGrid::new(horizon, by_policy.max(by_cfl))
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bracket;
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(invalid(format!(
                "bracket must satisfy 0 <= lo < hi, got [{lo}, {hi}]"
            )));
        }
        if !(self.nt_per_unit > 0.0) {
            return Err(invalid("nt_per_unit must be positive"));
        }
        let grid = self.grid()?;
        let y0 = self.y0.sample(&grid)?;
        let target = self.target.sample(&grid)?;
        if self.steer.nonnegative && (y0[0] < 0.0 || y0[grid.nx()] < 0.0) {
            return Err(invalid("initial corners are negative"));
        }
        if target[0] < 0.0 || target[grid.nx()] < 0.0 {
            return Err(invalid("target boundary values are negative"));
        }
        Ok(())
    }

    /// Relative gap between the initial datum and the target.
    fn initial_gap(&self) -> Result<f64> {
        let grid = self.grid()?;
        Ok(relative_l2_gap(
            &self.y0.sample(&grid)?,
            &self.target.sample(&grid)?,
        ))
    }
}

fn start_seed(seed: u64, horizon: f64, k: usize) -> u64 {
    seed ^ horizon.to_bits().rotate_left(17) ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Fixed-horizon feasibility: best of a warm start from the reference control
/// and seeded random nonnegative starts.
pub fn feasible(horizon: f64, prob: &MinTimeProblem) -> Result<(bool, SteerResult)> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    let grid = prob.grid()?;
    let tgrid = prob.time_grid(horizon)?;
    let nt = tgrid.nt();
    let y0 = prob.y0.sample(&grid)?;
    let target = prob.target.sample(&grid)?;
    let (ub0, ub1) = (target[0], target[grid.nx()]);
    let reference = BoundaryControl::constant(nt, ub0, ub1);
    let problem = SteerProblem {
        f: &prob.f,
        grid,
        tgrid,
        y_init: &y0,
        target: &target,
        reference: &reference,
    };

    let scale = 2.0 * ub0.max(ub1).max(y0[0]).max(y0[grid.nx()]).max(1.0);
    let starts: Vec<BoundaryControl> = (0..=prob.restarts)
        .map(|k| {
            if k == 0 {
                return pinned_guess(&reference, &y0);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(start_seed(prob.seed, horizon, k));
            let left = (0..=nt).map(|_| rng.gen::<f64>() * scale).collect();
            let right = (0..=nt).map(|_| rng.gen::<f64>() * scale).collect();
            BoundaryControl::new(left, right).expect("random start has control shape")
        })
        .collect();

    let results: Vec<Result<SteerResult>> = starts
        .par_iter()
        .map(|s| local_steer(&problem, &prob.steer, Some(s)))
        .collect();
    let mut best: Option<SteerResult> = None;
    for r in results {
        let r = r?;
        if best
            .as_ref()
            .is_none_or(|b| r.terminal_mismatch < b.terminal_mismatch)
        {
            best = Some(r);
        }
    }
    let best = best.expect("at least the warm start ran");
    Ok((best.terminal_mismatch <= prob.steer.eps_feas, best))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub horizon: f64,
    pub feasible: bool,
    pub mismatch: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinTimeResult {
    pub t_min_estimate: f64,
    pub bracket_final: (f64, f64),
    pub control_at_tmin: BoundaryControl,
    pub tgrid_at_tmin: TimeGrid,
    pub l1_mass: f64,
    pub sparsity: f64,
    /// Every feasibility solve in the order it ran.
    pub probes: Vec<Probe>,
    /// Closed-form waiting-time bound, when one applies.
    pub lower_bound: Option<f64>,
    /// `t_min_estimate + tol_T >= lower_bound`.
    pub compatible: bool,
    /// Pairs `(feasible T, infeasible T)` with the feasible one smaller.
    pub monotonicity_violations: Vec<(f64, f64)>,
}

impl MinTimeResult {
    /// JSON `{t_min, bracket, l1_mass, sparsity, lower_bound, compatible}`.
    pub fn summary_json(&self) -> String {
        let lb = self.lower_bound.map_or("null".to_string(), fmt17);
        format!(
            "{{\"t_min\":{},\"bracket\":[{},{}],\"l1_mass\":{},\"sparsity\":{},\"lower_bound\":{},\"compatible\":{}}}",
            fmt17(self.t_min_estimate),
            fmt17(self.bracket_final.0),
            fmt17(self.bracket_final.1),
            fmt17(self.l1_mass),
            fmt17(self.sparsity),
            lb,
            self.compatible
        )
    }
}

/// Analytic bound for the heat equation between constant states.
fn closed_form_bound(prob: &MinTimeProblem) -> Option<f64> {
    if prob.f != Nonlinearity::Zero {
        return None;
    }
    let (a, b) = (prob.y0.as_constant()?, prob.target.as_constant()?);
    if a <= 0.0 || b <= 0.0 {
        return None;
    }
    lower_bound(a, b).ok().map(|r| r.bound)
}

struct Log {
    probes: Vec<Probe>,
}

impl Log {
    fn run(&mut self, horizon: f64, prob: &MinTimeProblem) -> Result<(bool, Option<SteerResult>)> {
        if horizon == 0.0 {
            let gap = prob.initial_gap()?;
            let ok = gap <= prob.steer.eps_feas;
            self.probes.push(Probe {
                horizon,
                feasible: ok,
                mismatch: gap,
            });
            return Ok((ok, None));
        }
        let (ok, r) = feasible(horizon, prob)?;
        self.probes.push(Probe {
            horizon,
            feasible: ok,
            mismatch: r.terminal_mismatch,
        });
        Ok((ok, Some(r)))
    }

    fn violations(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for a in self.probes.iter().filter(|p| p.feasible) {
            for b in self.probes.iter().filter(|p| !p.feasible) {
                if a.horizon < b.horizon {
                    out.push((a.horizon, b.horizon));
                }
            }
        }
        out
    }
}

const BRACKET_EXPANSIONS: usize = 10;

/// Bisection on the horizon down to a bracket of width `tol_t`.
pub fn min_time_bisection(prob: &MinTimeProblem, tol_t: f64) -> Result<MinTimeResult> {
    prob.validate()?;
    if !(tol_t > 0.0) {
        return Err(invalid("tol_T must be positive"));
    }
    let mut log = Log { probes: Vec::new() };
    let (mut lo, mut hi) = prob.bracket;

    let (mut hi_ok, mut hi_res) = log.run(hi, prob)?;
    for _ in 0..BRACKET_EXPANSIONS {
        if hi_ok {
            break;
        }
        lo = lo.max(hi);
        hi *= 2.0;
        (hi_ok, hi_res) = log.run(hi, prob)?;
    }
    let (mut lo_ok, mut lo_res) = log.run(lo, prob)?;
    for _ in 0..BRACKET_EXPANSIONS {
        if !lo_ok || lo == 0.0 {
            break;
        }
        if hi_ok {
            hi = lo;
            hi_res = lo_res.clone();
        }
        lo *= 0.5;
        (lo_ok, lo_res) = log.run(lo, prob)?;
    }

    if !hi_ok || (lo_ok && lo > 0.0) {
        return Err(Error::BracketFailure {
            lo,
            hi,
            lo_feasible: lo_ok,
            hi_feasible: hi_ok,
            lo_result: Box::new(lo_res),
            hi_result: Box::new(hi_res),
        });
    }

    let mut best = hi_res.expect("feasible upper end carries a solve");
    if lo_ok {
        // the initial datum already matches the target
        hi = 0.0;
    } else {
        while hi - lo > tol_t {
            let mid = 0.5 * (lo + hi);
            let (ok, res) = log.run(mid, prob)?;
            if ok {
                hi = mid;
                best = res.expect("positive horizon carries a solve");
            } else {
                lo = mid;
            }
        }
    }

    let lower = closed_form_bound(prob);
    let t_min_estimate = 0.5 * (lo + hi);
    let dt = best.tgrid.dt();
    Ok(MinTimeResult {
        t_min_estimate,
        bracket_final: (lo, hi),
        l1_mass: best.control.l1_mass(dt),
        sparsity: best.control.sparsity(dt),
        tgrid_at_tmin: best.tgrid,
        control_at_tmin: best.control,
        monotonicity_violations: log.violations(),
        probes: log.probes,
        lower_bound: lower,
        compatible: lower.is_none_or(|b| t_min_estimate + tol_t >= b),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub horizon: f64,
    pub mass: f64,
    pub sparsity: f64,
    pub feasible: bool,
    pub mismatch: f64,
}

/// Reruns the feasibility solve at `t_min + offset` for every offset.
pub fn mass_sweep(prob: &MinTimeProblem, t_min: f64, offsets: &[f64]) -> Result<Vec<SweepRow>> {
    prob.validate()?;
    offsets
        .par_iter()
        .map(|&off| {
            let horizon = t_min + off;
            let (ok, r) = feasible(horizon, prob)?;
            let dt = r.tgrid.dt();
            Ok(SweepRow {
                horizon,
                mass: r.control.l1_mass(dt),
                sparsity: r.control.sparsity(dt),
                feasible: ok,
                mismatch: r.terminal_mismatch,
            })
        })
        .collect()
}

/// CSV `T,mass,sparsity,feasible` with `feasible` as 0 or 1.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let data: Vec<[f64; 4]> = rows
        .iter()
        .map(|r| {
            [
                r.horizon,
                r.mass,
                r.sparsity,
                f64::from(u8::from(r.feasible)),
            ]
        })
        .collect();
    csv_table(
        "T,mass,sparsity,feasible",
        data.iter().map(|r| r.as_slice()),
    )
}

//! Control synthesis under sign constraints.
//!
//! [`local_steer`] minimizes
//! `J(u) = 1/2 ||Y_nt(u) - target||^2 + rho/2 ||u - u_ref||^2` over `u >= 0`
//! by projected descent with an Armijo backtracking search along the
//! projection arc. Directions are either the (BB-scaled) gradient or a
//! two-metric Gauss-Newton direction: Newton-like on the free variables,
//! plain gradient on the variables held at the bound. The terminal Jacobian
//! has only `nx + 1` rows, so the Gauss-Newton system is solved in the
//! small dual space.
//!
//! [`staircase`] chains local steering problems along a path of steady
//! states; [`stabilize_then_steer`] rides the reference control first and
//! steers only at the end.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::adjoint::{terminal_jacobian, SteeringObjective};
use crate::control::BoundaryControl;
use crate::error::{invalid, Error, Result};
use crate::fdsolver::{self, l2_norm, relative_l2_gap, simulate, BLOWUP_CAP};
use crate::mesh::{steps_for, Grid1D, TimeGrid};
use crate::nonlinearity::Nonlinearity;
use crate::steady::{midpoint_state, SteadyPath, SteadyState};
use crate::trajectory::Trajectory;

/// Armijo sufficient-decrease constant.
pub const ARMIJO_SLOPE: f64 = 1e-4;
/// Backtracking factor.
pub const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Projected gradient with Barzilai-Borwein step lengths.
    Gradient,
    /// Two-metric projection with a Gauss-Newton metric on free variables.
    GaussNewton,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteerOptions {
    /// Initial Tikhonov weight.
    pub rho: f64,
    /// Annealing stops at this weight.
    pub rho_floor: f64,
    /// Factor applied to `rho` when progress stalls.
    pub anneal: f64,
    /// Relative `L^2` terminal tolerance.
    pub eps_feas: f64,
    /// Iteration budget.
    pub budget: usize,
    pub nonnegative: bool,
    pub direction: Direction,
    /// Levenberg-Marquardt damping added to `rho` in the Gauss-Newton metric.
    pub damping: f64,
    /// Stalled iterations tolerated at the floor weight before giving up.
    pub patience: usize,
}

impl Default for SteerOptions {
    fn default() -> Self {
        Self {
            rho: 1e-3,
            rho_floor: 1e-14,
            anneal: 0.1,
            eps_feas: 1e-4,
            budget: 5000,
            nonnegative: true,
            direction: Direction::GaussNewton,
            damping: 1e-10,
            patience: 25,
        }
    }
}

/// Fixed-horizon steering problem from `y_init` to `target`.
#[derive(Clone, Debug)]
pub struct SteerProblem<'a> {
    pub f: &'a Nonlinearity,
    pub grid: Grid1D,
    pub tgrid: TimeGrid,
    pub y_init: &'a [f64],
    pub target: &'a [f64],
    pub reference: &'a BoundaryControl,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub rho: f64,
    pub objective: f64,
    pub mismatch: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteerResult {
    pub control: BoundaryControl,
    pub tgrid: TimeGrid,
    pub terminal_state: Vec<f64>,
    /// Relative `L^2` gap between the terminal state and the target.
    pub terminal_mismatch: f64,
    /// `||u - u_ref||_inf`.
    pub deviation_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every accepted step, tagged with the weight in force.
    pub history: Vec<IterRecord>,
}

impl SteerResult {
    /// CSV `t,u_left,u_right`.
    pub fn control_csv(&self) -> String {
        control_csv(&self.control, &self.tgrid)
    }
}

pub fn control_csv(u: &BoundaryControl, tgrid: &TimeGrid) -> String {
    let rows: Vec<[f64; 3]> = (0..=u.nt())
        .map(|i| [tgrid.time(i), u.left()[i], u.right()[i]])
        .collect();
    crate::export::csv_table("t,u_left,u_right", rows.iter().map(|r| r.as_slice()))
}

struct Iterate {
    u: Vec<f64>,
    value: f64,
    mismatch: f64,
    traj: Trajectory,
}

struct Solver<'a> {
    problem: &'a SteerProblem<'a>,
    opts: SteerOptions,
    /// Indices held fixed: the first samples, tied to the initial corners.
    pinned: [usize; 2],
    weights: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn new(problem: &'a SteerProblem<'a>, opts: SteerOptions) -> Self {
        let nt = problem.tgrid.nt();
        Self {
            problem,
            opts,
            pinned: [0, nt + 1],
            weights: problem.grid.trapezoid_weights(),
        }
    }

    fn objective(&self, rho: f64) -> SteeringObjective<'a> {
        SteeringObjective {
            f: self.problem.f,
            grid: self.problem.grid,
            tgrid: self.problem.tgrid,
            y_init: self.problem.y_init,
            target: self.problem.target,
            reference: self.problem.reference,
            rho,
        }
    }

    /// Objective at `u`; blow-up maps to `None`.
    fn eval(&self, u: &[f64], rho: f64) -> Result<Option<Iterate>> {
        let control = BoundaryControl::from_flat(u)?;
        match self.objective(rho).evaluate(&control) {
            Ok(e) => Ok(Some(Iterate {
                u: u.to_vec(),
                value: e.value,
                mismatch: e.mismatch,
                traj: e.trajectory,
            })),
            Err(Error::BlowUp { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn gradient(&self, it: &Iterate, rho: f64) -> Vec<f64> {
        let control = BoundaryControl::from_flat(&it.u).expect("flat control");
        let mut g = self.objective(rho).gradient(&control, &it.traj).to_flat();
        for &p in &self.pinned {
            g[p] = 0.0;
        }
        g
    }

    fn project(&self, v: &mut [f64]) {
        if self.opts.nonnegative {
            for x in v.iter_mut() {
                if *x < 0.0 {
                    *x = 0.0;
                }
            }
        }
    }

    fn is_pinned(&self, k: usize) -> bool {
        self.pinned.contains(&k)
    }

    /// Backtracking along `P(u + lambda d)`.
    fn line_search(
        &self,
        cur: &Iterate,
        g: &[f64],
        d: &[f64],
        rho: f64,
    ) -> Result<Option<Iterate>> {
        let mut lambda = 1.0;
        let mut trial = vec![0.0; cur.u.len()];
        for _ in 0..MAX_BACKTRACKS {
            for k in 0..trial.len() {
                trial[k] = cur.u[k] + lambda * d[k];
            }
            self.project(&mut trial);
            for &p in &self.pinned {
                trial[p] = cur.u[p];
            }
            let slope: f64 = g
                .iter()
                .zip(trial.iter().zip(&cur.u))
                .map(|(gk, (a, b))| gk * (a - b))
                .sum();
            if slope < 0.0 {
                if let Some(next) = self.eval(&trial, rho)? {
                    if next.value <= cur.value + ARMIJO_SLOPE * slope && next.value < cur.value {
                        return Ok(Some(next));
                    }
                }
            }
            lambda *= BACKTRACK;
        }
        Ok(None)
    }

    fn gradient_direction(&self, g: &[f64], step: f64) -> Vec<f64> {
        let dt = self.problem.tgrid.dt();
        g.iter().map(|gk| -step * gk / dt).collect()
    }

    /// Two-metric direction. Variables at the bound whose gradient pushes
    /// outward follow the scaled gradient; the rest take the damped
    /// Gauss-Newton step `-(A^T A + c I)^{-1} g_F`, computed through the
    /// `(nx+1) x (nx+1)` system `(c I + A A^T)`.
    fn gauss_newton_direction(&self, cur: &Iterate, g: &[f64], rho: f64) -> Option<Vec<f64>> {
        let dt = self.problem.tgrid.dt();
        let m = cur.u.len();
        let n = self.problem.grid.len();

        let mut active = vec![false; m];
        if self.opts.nonnegative {
            let pg: f64 = (0..m)
                .map(|k| {
                    let step = (cur.u[k] - g[k] / dt).max(0.0) - cur.u[k];
                    step * step
                })
                .sum::<f64>()
                .sqrt();
            let eps = pg.min(1e-3);
            for k in 0..m {
                active[k] = cur.u[k] <= eps && g[k] > 0.0;
            }
        }
        let free: Vec<usize> = (0..m)
            .filter(|&k| !active[k] && !self.is_pinned(k))
            .collect();

        let jac = terminal_jacobian(self.problem.f, &cur.traj);
        let sw: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let a = DMatrix::from_fn(n, free.len(), |j, c| sw[j] * jac[j][free[c]]);
        let terminal = cur.traj.terminal();
        let e = DVector::from_fn(n, |j, _| sw[j] * (terminal[j] - self.problem.target[j]));

        let c = (rho + self.opts.damping) * dt;
        let mut k = &a * a.transpose();
        for j in 0..n {
            k[(j, j)] += c;
        }
        let chol = k.cholesky()?;

        // d_F = -[A^T K^{-1} e + (rho / (rho + mu)) (delta - A^T K^{-1} A delta)]
        let mut d_free = a.transpose() * chol.solve(&e);
        if rho > 0.0 {
            let reference = self.problem.reference.to_flat();
            let delta = DVector::from_fn(free.len(), |c, _| cur.u[free[c]] - reference[free[c]]);
            let back = a.transpose() * chol.solve(&(&a * &delta));
            d_free += (delta - back) * (rho / (rho + self.opts.damping));
        }

        let mut d = vec![0.0; m];
        for (c, &k) in free.iter().enumerate() {
            d[k] = -d_free[c];
        }
        for k in 0..m {
            if active[k] {
                d[k] = -g[k] / dt;
            }
        }
        if d.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(d)
    }

    fn run(&self, initial: Vec<f64>) -> Result<SteerResult> {
        let mut rho = self.opts.rho;
        let mut cur = self.eval(&initial, rho)?.ok_or(Error::BlowUp { step: 0 })?;
        let mut history = vec![IterRecord {
            rho,
            objective: cur.value,
            mismatch: cur.mismatch,
        }];
        let mut iterations = 0;
        let mut stalls = 0;
        let mut bb_step = 1.0;
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;

        while cur.mismatch > self.opts.eps_feas && iterations < self.opts.budget {
            iterations += 1;
            let g = self.gradient(&cur, rho);

            let mut next = None;
            if self.opts.direction == Direction::GaussNewton {
                if let Some(d) = self.gauss_newton_direction(&cur, &g, rho) {
                    next = self.line_search(&cur, &g, &d, rho)?;
                }
            } else if let Some((pu, pg)) = &prev {
                let dt = self.problem.tgrid.dt();
                let (mut ss, mut sy) = (0.0, 0.0);
                for k in 0..g.len() {
                    let s = cur.u[k] - pu[k];
                    ss += s * s;
                    sy += s * (g[k] - pg[k]) / dt;
                }
                bb_step = if sy > 0.0 {
                    (ss / sy).clamp(1e-12, 1e12)
                } else {
                    bb_step * 10.0
                };
            }
            if next.is_none() {
                let d = self.gradient_direction(&g, bb_step);
                next = self.line_search(&cur, &g, &d, rho)?;
            }

            let progressed = match next {
                Some(n) => {
                    let decrease = cur.value - n.value;
                    let relative = decrease / cur.value.max(f64::MIN_POSITIVE);
                    prev = Some((cur.u.clone(), g));
                    cur = n;
                    history.push(IterRecord {
                        rho,
                        objective: cur.value,
                        mismatch: cur.mismatch,
                    });
                    relative >= 1e-6
                }
                None => false,
            };

            if !progressed {
                if rho > self.opts.rho_floor {
                    rho = (rho * self.opts.anneal).max(self.opts.rho_floor);
                    cur = self
                        .eval(&cur.u.clone(), rho)?
                        .expect("current iterate already evaluated without blow-up");
                    prev = None;
                    history.push(IterRecord {
                        rho,
                        objective: cur.value,
                        mismatch: cur.mismatch,
                    });
                } else {
                    stalls += 1;
                    if stalls >= self.opts.patience {
                        break;
                    }
                }
            } else {
                stalls = 0;
            }
        }

        let control = BoundaryControl::from_flat(&cur.u)?;
        let control = if self.opts.nonnegative {
            control.into_nonnegative()?
        } else {
            control
        };
        Ok(SteerResult {
            deviation_sup: control.sup_distance(self.problem.reference),
            control,
            tgrid: self.problem.tgrid,
            terminal_state: cur.traj.terminal().to_vec(),
            terminal_mismatch: cur.mismatch,
            iterations,
            converged: cur.mismatch <= self.opts.eps_feas,
            history,
        })
    }
}

/// Reference control with its first samples replaced by the initial corners.
pub fn pinned_guess(reference: &BoundaryControl, y_init: &[f64]) -> BoundaryControl {
    let mut u = reference.clone();
    u.left_mut()[0] = y_init[0];
    u.right_mut()[0] = *y_init.last().unwrap();
    u
}

/// Steers `y_init` toward `target` over the problem's horizon.
///
/// `initial` defaults to the reference control. The first control samples
/// are tied to the corners of `y_init` and never move.
pub fn local_steer(
    problem: &SteerProblem<'_>,
    opts: &SteerOptions,
    initial: Option<&BoundaryControl>,
) -> Result<SteerResult> {
    let SteerProblem {
        grid,
        tgrid,
        y_init,
        target,
        reference,
        ..
    } = problem;
    tgrid.check_cfl(grid)?;
    if y_init.len() != grid.len() || target.len() != grid.len() {
        return Err(Error::MeshMismatch(
            "initial state and target must be sampled on the grid".into(),
        ));
    }
    if reference.nt() != tgrid.nt() {
        return Err(Error::MeshMismatch(format!(
            "reference control covers {} steps, time grid has {}",
            reference.nt(),
            tgrid.nt()
        )));
    }
    if y_init.iter().any(|v| !(v.abs() <= BLOWUP_CAP)) {
        return Err(invalid("initial state exceeds the working cap"));
    }
    if !(opts.eps_feas > 0.0 && opts.rho >= 0.0 && opts.rho_floor >= 0.0) {
        return Err(invalid(
            "steering options must be nonnegative with eps_feas > 0",
        ));
    }

    let mut start = match initial {
        Some(u) => {
            if u.nt() != tgrid.nt() {
                return Err(Error::MeshMismatch(
                    "initial guess has the wrong length".into(),
                ));
            }
            pinned_guess(u, y_init)
        }
        None => pinned_guess(reference, y_init),
    }
    .to_flat();
    if opts.nonnegative {
        if y_init[0] < 0.0 || y_init[grid.nx()] < 0.0 {
            return Err(invalid(
                "initial corners are negative; no nonnegative control is compatible",
            ));
        }
        start.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    Solver::new(problem, *opts).run(start)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StairOptions {
    /// Horizon of every segment.
    pub t_step: f64,
    /// Time steps per segment; defaults to the plain CFL step at ratio 0.4.
    pub steps_per_segment: Option<usize>,
    pub max_refinement: usize,
    pub steer: SteerOptions,
}

impl Default for StairOptions {
    fn default() -> Self {
        Self {
            t_step: 1.0,
            steps_per_segment: None,
            max_refinement: 6,
            steer: SteerOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StairResult {
    pub control: BoundaryControl,
    pub tgrid: TimeGrid,
    pub segments: Vec<SteerResult>,
    /// Boundary values of the steady state each segment aimed at.
    pub waypoints: Vec<(f64, f64)>,
    pub nonnegative: bool,
    pub total_time: f64,
    pub min_control_value: f64,
    /// Relative gap to the path's end state, from a fresh re-simulation.
    pub terminal_mismatch: f64,
}

impl StairResult {
    /// JSON `{segments, total_time, min_control_value, terminal_mismatch}`.
    pub fn metadata_json(&self) -> String {
        use crate::export::fmt17;
        format!(
            "{{\"segments\":{},\"total_time\":{},\"min_control_value\":{},\"terminal_mismatch\":{}}}",
            self.segments.len(),
            fmt17(self.total_time),
            fmt17(self.min_control_value),
            fmt17(self.terminal_mismatch)
        )
    }
}

/// Stair-case steering along `path`: each segment steers to the next steady
/// state with a control within `nu` of that state's boundary values, so the
/// concatenated control stays nonnegative. A failed segment is split by
/// inserting the midpoint steady state.
pub fn staircase(f: &Nonlinearity, path: &SteadyPath, opts: &StairOptions) -> Result<StairResult> {
    if !(path.nu > 0.0) {
        return Err(invalid(format!(
            "stair-case needs a positive boundary floor, path has nu = {}",
            path.nu
        )));
    }
    if !(opts.t_step > 0.0) {
        return Err(invalid("segment horizon must be positive"));
    }
    let grid = path.grid;
    let nt = opts
        .steps_per_segment
        .unwrap_or_else(|| steps_for(opts.t_step, 0.4 * grid.dx() * grid.dx()));
    let seg_grid = TimeGrid::new(opts.t_step, nt)?;
    seg_grid.check_cfl(&grid)?;
    let nu = path.nu;

    // pending targets, front first, each tagged with its refinement level
    let mut pending: Vec<(SteadyState, usize)> = path.states[1..]
        .iter()
        .rev()
        .map(|s| (s.clone(), 0))
        .collect();
    let mut reached: SteadyState = path.start().clone();
    let mut state = path.start().profile.clone();
    let mut segments = Vec::new();
    let mut waypoints = Vec::new();
    let mut control: Option<BoundaryControl> = None;

    while let Some((target, level)) = pending.pop() {
        let reference = BoundaryControl::constant(nt, target.boundary.0, target.boundary.1);
        let problem = SteerProblem {
            f,
            grid,
            tgrid: seg_grid,
            y_init: &state,
            target: &target.profile,
            reference: &reference,
        };
        let result = local_steer(&problem, &opts.steer, None)?;
        if result.converged && result.deviation_sup < nu {
            state = result.terminal_state.clone();
            control = Some(match control {
                None => result.control.clone(),
                Some(c) => c.concat(&result.control)?,
            });
            waypoints.push(target.boundary);
            segments.push(result);
            reached = target;
            continue;
        }
        if level >= opts.max_refinement {
            return Err(Error::RefinementExhausted {
                segment: segments.len(),
                levels: level,
                deviation: result.deviation_sup,
                floor: nu,
            });
        }
        let mid = midpoint_state(f, &grid, &reached, &target)?;
        pending.push((target, level + 1));
        pending.push((mid, level + 1));
    }

    let control = match control {
        Some(c) => c,
        None => BoundaryControl::constant(nt, path.start().boundary.0, path.start().boundary.1),
    };
    let steps = control.nt();
    let total_time = opts.t_step * (steps / nt) as f64;
    let tgrid = TimeGrid::new(total_time, steps)?;
    let out = simulate(&path.start().profile, &control, f, &grid, &tgrid)?;
    let terminal_mismatch = relative_l2_gap(out.trajectory.terminal(), &path.end().profile);
    let min_control_value = control.min_value();
    let nonnegative = min_control_value >= 0.0;
    Ok(StairResult {
        control,
        tgrid,
        segments,
        waypoints,
        nonnegative,
        total_time,
        min_control_value,
        terminal_mismatch,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizeResult {
    /// Control and terminal data over the whole horizon `[0, T]`.
    pub steer: SteerResult,
    /// `||y - ybar||_2` at `T - tau`, after riding the reference control.
    pub gap_at_switch: f64,
    /// `||y0 - ybar0||_2`.
    pub initial_gap: f64,
    /// Contraction rate `pi^2 + inf f'`.
    pub decay_rate: f64,
    /// `||y0 - ybar0||_2 exp(-rate (T - 2 tau))`.
    pub predicted_gap: f64,
    /// Final-phase deviation from the reference control.
    pub final_deviation: f64,
    pub nonnegative: bool,
}

/// Applies the reference control of `target` on `[0, T - tau]`, letting
/// dissipation pull the state toward the target trajectory, then steers on
/// `[T - tau, T]` with deviation below `nu`.
pub fn stabilize_then_steer(
    f: &Nonlinearity,
    y0: &[f64],
    target: &Trajectory,
    tau: f64,
    nu: f64,
    opts: &SteerOptions,
) -> Result<StabilizeResult> {
    if !f.is_dissipative() {
        return Err(invalid(format!("{f} is not dissipative")));
    }
    let grid = *target.grid();
    let tgrid = *target.tgrid();
    let horizon = tgrid.horizon();
    if !(tau > 0.0 && horizon > 2.0 * tau) {
        return Err(invalid(format!(
            "need T > 2 tau, got T = {horizon}, tau = {tau}"
        )));
    }
    if !target.is_complete() {
        return Err(invalid("target trajectory is truncated"));
    }
    if y0.len() != grid.len() {
        return Err(Error::MeshMismatch(
            "initial datum does not match the grid".into(),
        ));
    }
    let reference = target.boundary();
    let ref_min = reference.left()[1..]
        .iter()
        .chain(&reference.right()[1..])
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(nu > 0.0 && ref_min >= nu) {
        return Err(invalid(format!(
            "reference control must stay above nu = {nu}, minimum is {ref_min}"
        )));
    }

    let nt = tgrid.nt();
    let switch = ((horizon - tau) / tgrid.dt()).round() as usize;
    if switch == 0 || switch >= nt {
        return Err(invalid("switching time falls outside the time grid"));
    }

    // phase 1: ride the reference control
    let mut ride_left = reference.left()[..=switch].to_vec();
    let mut ride_right = reference.right()[..=switch].to_vec();
    ride_left[0] = y0[0];
    ride_right[0] = y0[grid.nx()];
    let ride = BoundaryControl::new(ride_left, ride_right)?;
    let ride_grid = TimeGrid::new(tgrid.time(switch), switch)?;
    let phase1 = simulate(y0, &ride, f, &grid, &ride_grid)?;
    if phase1.blew_up {
        return Err(Error::BlowUp {
            step: phase1.blowup_step.unwrap_or(0),
        });
    }
    let y_switch = phase1.trajectory.terminal().to_vec();
    let gap_at_switch = l2_norm(&fdsolver::diff(&y_switch, target.row(switch)));
    let initial_gap = l2_norm(&fdsolver::diff(y0, target.row(0)));

    // phase 2: steer on the remaining window
    let tail_grid = TimeGrid::new(horizon - tgrid.time(switch), nt - switch)?;
    let tail_ref = BoundaryControl::new(
        reference.left()[switch..].to_vec(),
        reference.right()[switch..].to_vec(),
    )?;
    let problem = SteerProblem {
        f,
        grid,
        tgrid: tail_grid,
        y_init: &y_switch,
        target: target.terminal(),
        reference: &tail_ref,
    };
    let tail = local_steer(&problem, opts, None)?;
    if tail.deviation_sup >= nu {
        return Err(Error::HorizonTooShort {
            deviation: tail.deviation_sup,
            floor: nu,
        });
    }

    let control = ride.concat(&tail.control)?;
    let full = simulate(y0, &control, f, &grid, &tgrid)?;
    let terminal_state = full.trajectory.terminal().to_vec();
    let terminal_mismatch = relative_l2_gap(&terminal_state, target.terminal());
    let rate = f.dissipation_rate();
    let nonnegative = control.min_value() >= 0.0;
    let deviation_sup = control.sup_distance(&reference);
    Ok(StabilizeResult {
        steer: SteerResult {
            control,
            tgrid,
            terminal_state,
            terminal_mismatch,
            deviation_sup,
            iterations: tail.iterations,
            converged: terminal_mismatch <= opts.eps_feas,
            history: tail.history,
        },
        gap_at_switch,
        initial_gap,
        decay_rate: rate,
        predicted_gap: initial_gap * (-rate * (horizon - 2.0 * tau)).exp(),
        final_deviation: tail.deviation_sup,
        nonnegative,
    })
}

use std::f64::consts::PI;

use heatctrl_core::adjoint::{duality_residual, normal_derivative, solve_adjoint, Potential};
use heatctrl_core::bounds::{
    first_mode_after, flux_sign_flip, lower_bound_decreasing, lower_bound_increasing,
    nondissipative_envelope,
};
use heatctrl_core::fdsolver::{norms, relative_l2_gap};
use heatctrl_core::mesh::{steps_for, strengthened_cfl};
use heatctrl_core::mintime::sweep_csv;
use heatctrl_core::synth::{control_csv, Direction};
use heatctrl_core::{
    build_path, lower_bound, mass_sweep, min_time_bisection, simulate, solve_steady,
    stabilize_then_steer, staircase, BoundResult, BoundaryControl, Grid1D, MinTimeProblem,
    Nonlinearity, StairOptions, SteadyPath, SteadyState, SteerOptions, TimeGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::*;
use crate::output::{array, num_list, precondition, write_opt, CliResult, Obj};
use crate::specs::{self, ControlSpec};

/// Mesh ratio used whenever a step count is not given.
const DEFAULT_RATIO: f64 = 0.4;

fn default_steps(horizon: f64, grid: &Grid1D) -> usize {
    steps_for(horizon, DEFAULT_RATIO * grid.dx() * grid.dx())
}

fn time_grid(horizon: f64, nt: Option<usize>, grid: &Grid1D) -> CliResult<TimeGrid> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(precondition(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let nt = nt.unwrap_or_else(|| default_steps(horizon, grid));
    Ok(TimeGrid::new(horizon, nt)?)
}

pub fn steer_options(flags: &SteerFlags) -> CliResult<SteerOptions> {
    let direction = match flags.method.as_str() {
        "gauss-newton" => Direction::GaussNewton,
        "gradient" => Direction::Gradient,
        other => return Err(precondition(format!("unknown method {other:?}"))),
    };
    if !(flags.eps > 0.0) || !(flags.rho >= 0.0) || flags.budget == 0 {
        return Err(precondition(
            "eps must be positive, rho nonnegative, budget nonzero",
        ));
    }
    Ok(SteerOptions {
        eps_feas: flags.eps,
        budget: flags.budget,
        rho: flags.rho,
        direction,
        ..SteerOptions::default()
    })
}

pub fn problem(flags: &ProblemFlags) -> CliResult<MinTimeProblem> {
    let grid = Grid1D::new(flags.nx)?;
    let mut p = MinTimeProblem::new(
        specs::nonlinearity(&flags.f)?,
        specs::profile(&flags.y0, &grid)?,
        specs::profile(&flags.y1, &grid)?,
        flags.nx,
    );
    p.nt_per_unit = flags.nt_per_unit;
    p.bracket = (flags.bracket_lo, flags.bracket_hi);
    p.seed = flags.seed;
    p.restarts = flags.restarts;
    p.steer = steer_options(&flags.steer)?;
    Ok(p)
}

fn steady_state(f: &Nonlinearity, spec: &str, grid: &Grid1D) -> CliResult<SteadyState> {
    let (l, r) = specs::pair(spec)?;
    let guess = grid.sample(|x| l + (r - l) * x);
    Ok(solve_steady(f, l, r, grid, &guess)?)
}

fn steady_path(
    f: &Nonlinearity,
    from: &str,
    to: &str,
    steps: usize,
    grid: &Grid1D,
) -> CliResult<SteadyPath> {
    let a = steady_state(f, from, grid)?;
    let b = steady_state(f, to, grid)?;
    Ok(build_path(f, &a, &b, steps, grid)?)
}

pub fn simulate_cmd(a: &SimulateArgs) -> CliResult<String> {
    let f = specs::nonlinearity(&a.f)?;
    let grid = Grid1D::new(a.nx)?;
    let y0 = specs::state(&a.y0, &grid)?;
    let (u, tgrid) = match specs::control(&a.u)? {
        ControlSpec::File(u, tg) => (u, tg),
        ControlSpec::Constant(l, r) => {
            let tg = time_grid(a.horizon, a.nt, &grid)?;
            (BoundaryControl::constant(tg.nt(), l, r), tg)
        }
    };
    let target = a
        .target
        .as_deref()
        .map(|t| specs::state(t, &grid))
        .transpose()?;
    let out = simulate(&y0, &u, &f, &grid, &tgrid)?;
    let traj = &out.trajectory;
    write_opt(a.out.as_deref(), || traj.to_csv())?;

    let terminal = traj.terminal();
    let n = norms(terminal)?;
    let mut obj = Obj::new()
        .int("nx", grid.nx())
        .int("nt", tgrid.nt())
        .num("T", tgrid.horizon())
        .flag("blew_up", out.blew_up)
        .raw(
            "blowup_step",
            out.blowup_step.map_or("null".into(), |s| s.to_string()),
        )
        .num("terminal_l2", n.l2)
        .num("terminal_sup", n.sup)
        .num("min_value", traj.min_value())
        .num("max_value", traj.max_value());
    if let Some(t) = &target {
        obj = obj.num("terminal_mismatch", relative_l2_gap(terminal, t));
    }
    Ok(obj.raw("terminal", num_list(terminal)).finish())
}

pub fn steady_cmd(a: &SteadyArgs) -> CliResult<String> {
    let f = specs::nonlinearity(&a.f)?;
    let grid = Grid1D::new(a.nx)?;
    let path = steady_path(&f, &a.from, &a.to, a.steps, &grid)?;
    write_opt(a.out.as_deref(), || path.to_csv())?;
    let meta = path.metadata_json();
    write_opt(a.meta.as_deref(), || meta.clone())?;
    Ok(meta)
}

pub fn staircase_cmd(a: &StaircaseArgs) -> CliResult<String> {
    let f = specs::nonlinearity(&a.f)?;
    let grid = Grid1D::new(a.nx)?;
    let path = steady_path(&f, &a.from, &a.to, a.steps, &grid)?;
    let opts = StairOptions {
        t_step: a.t_step,
        steps_per_segment: a.nt_step,
        max_refinement: a.max_refinement,
        steer: steer_options(&a.steer)?,
    };
    let r = staircase(&f, &path, &opts)?;
    write_opt(a.out.as_deref(), || control_csv(&r.control, &r.tgrid))?;
    let meta = r.metadata_json();
    write_opt(a.meta.as_deref(), || meta.clone())?;
    Ok(meta)
}

pub fn stabilize_cmd(a: &StabilizeArgs) -> CliResult<String> {
    let f = specs::nonlinearity(&a.f)?;
    let grid = Grid1D::new(a.nx)?;
    let y0 = specs::state(&a.y0, &grid)?;
    let ybar = steady_state(&f, &a.ybar, &grid)?;
    let nu = a.nu.unwrap_or_else(|| ybar.min_boundary());
    let tgrid = time_grid(a.horizon, a.nt, &grid)?;
    let (l, r) = ybar.boundary;
    let ubar = BoundaryControl::constant(tgrid.nt(), l, r);
    let target = simulate(&ybar.profile, &ubar, &f, &grid, &tgrid)?.trajectory;
    let res = stabilize_then_steer(&f, &y0, &target, a.tau, nu, &steer_options(&a.steer)?)?;
    write_opt(a.out.as_deref(), || res.steer.control_csv())?;
    let summary = Obj::new()
        .num("initial_gap", res.initial_gap)
        .num("gap_at_switch", res.gap_at_switch)
        .num("decay_rate", res.decay_rate)
        .num("predicted_gap", res.predicted_gap)
        .num("final_deviation", res.final_deviation)
        .num("nu", nu)
        .flag("nonnegative", res.nonnegative)
        .num("min_control_value", res.steer.control.min_value())
        .num("terminal_mismatch", res.steer.terminal_mismatch)
        .flag("converged", res.steer.converged)
        .int("iterations", res.steer.iterations)
        .finish();
    write_opt(a.meta.as_deref(), || summary.clone())?;
    Ok(summary)
}

pub fn mintime_cmd(a: &MintimeArgs) -> CliResult<String> {
    let p = problem(&a.problem)?;
    let r = min_time_bisection(&p, a.tol_t)?;
    let summary = r.summary_json();
    write_opt(a.out.as_deref(), || summary.clone())?;
    write_opt(a.control_out.as_deref(), || {
        control_csv(&r.control_at_tmin, &r.tgrid_at_tmin)
    })?;
    Ok(summary)
}

pub fn bound_json(b: &BoundResult) -> String {
    let case = serde_json::to_string(&b.case).unwrap_or_else(|_| "null".into());
    Obj::new()
        .raw("case", case)
        .num("y0", b.y0)
        .num("y1", b.y1)
        .num("bound", b.bound)
        .num("alpha", b.alpha)
        .num("beta", b.beta)
        .num("T0", b.t0)
        .finish()
}

pub fn bound_cmd(a: &BoundArgs) -> CliResult<String> {
    let b = match a.case.as_deref() {
        None => lower_bound(a.y0, a.y1)?,
        Some("increasing") => lower_bound_increasing(a.y0, a.y1)?,
        Some("decreasing") => lower_bound_decreasing(a.y0, a.y1)?,
        Some(other) => return Err(precondition(format!("unknown case {other:?}"))),
    };
    let json = bound_json(&b);
    write_opt(a.out.as_deref(), || json.clone())?;
    Ok(json)
}

pub fn adjoint_check_cmd(a: &AdjointCheckArgs) -> CliResult<String> {
    let grid = Grid1D::new(a.nx)?;
    let tgrid = time_grid(a.horizon, Some(a.nt), &grid)?;
    let mut phi_t = match a.phi.as_str() {
        "sine" => grid.sample(|x| (PI * x).sin()),
        "two-mode" => grid.sample(|x| -a.alpha * (PI * x).sin() + a.beta * (3.0 * PI * x).sin()),
        other => return Err(precondition(format!("unknown final datum {other:?}"))),
    };
    let nx = grid.nx();
    phi_t[0] = 0.0;
    phi_t[nx] = 0.0;

    // u = 1 after the compatible first sample, from rest
    let nt = tgrid.nt();
    let mut left = vec![1.0; nt + 1];
    left[0] = 0.0;
    let u = BoundaryControl::new(left.clone(), left)?;
    let traj = simulate(
        &vec![0.0; grid.len()],
        &u,
        &Nonlinearity::Zero,
        &grid,
        &tgrid,
    )?
    .trajectory;
    let residual = duality_residual(&traj, &u, &phi_t, &Potential::zero())?;

    let adj = solve_adjoint(&phi_t, &Potential::zero(), &grid, &tgrid)?;
    let kappa = adj.boundary_couplings();
    let lhs = grid.inner(traj.terminal(), &phi_t);
    let rhs: f64 = -(0..=nt)
        .map(|i| tgrid.dt() * (u.left()[i] * kappa.left[i] + u.right()[i] * kappa.right[i]))
        .sum::<f64>();
    let flux = normal_derivative(&adj);
    write_opt(a.out.as_deref(), || flux.to_csv())?;
    Ok(Obj::new()
        .int("nx", nx)
        .int("nt", nt)
        .num("T", tgrid.horizon())
        .flag("cfl_ok", tgrid.cfl_ok(&grid))
        .num("duality_residual", residual)
        .num("transposition_defect", (lhs - rhs).abs())
        .num("max_positive_flux", flux.max_positive())
        .opt_num("flux_sign_flip", flux_sign_flip(&flux))
        .finish())
}

pub fn parse_offsets(s: &str) -> CliResult<Vec<f64>> {
    let offs = specs::numbers(s)?;
    if offs.iter().any(|o| *o < 0.0) {
        return Err(precondition("offsets must be nonnegative"));
    }
    Ok(offs)
}

pub fn sweep_rows_json(rows: &[heatctrl_core::mintime::SweepRow]) -> String {
    let items: Vec<String> = rows
        .iter()
        .map(|r| {
            Obj::new()
                .num("T", r.horizon)
                .num("mass", r.mass)
                .num("sparsity", r.sparsity)
                .flag("feasible", r.feasible)
                .num("mismatch", r.mismatch)
                .finish()
        })
        .collect();
    array(&items)
}

pub fn sweep_mass_cmd(a: &SweepMassArgs) -> CliResult<String> {
    let p = problem(&a.problem)?;
    let offsets = parse_offsets(&a.offsets)?;
    let t_min = match a.t_min {
        Some(t) => t,
        None => min_time_bisection(&p, a.tol_t)?.t_min_estimate,
    };
    let rows = mass_sweep(&p, t_min, &offsets)?;
    write_opt(a.out.as_deref(), || sweep_csv(&rows))?;
    Ok(Obj::new()
        .num("t_min", t_min)
        .raw("rows", sweep_rows_json(&rows))
        .finish())
}

pub fn counterexample_cmd(a: &CounterexampleArgs) -> CliResult<String> {
    let lambda = -a.c;
    let envelope = nondissipative_envelope(lambda, a.horizon)?;
    if !(a.amplitude >= 0.0 && a.amplitude.is_finite()) {
        return Err(precondition("amplitude must be nonnegative"));
    }
    let grid = Grid1D::new(a.nx)?;
    let dt = 0.9 * strengthened_cfl(&grid, lambda);
    let tgrid = time_grid(a.horizon, Some(steps_for(a.horizon, dt)), &grid)?;
    let nt = tgrid.nt();
    let floor = 0.95 * envelope * 0.5;

    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let scales = [0.0, 0.01, 0.1, 1.0];
    let mut pairings = Vec::with_capacity(a.trials);
    for k in 0..a.trials {
        let scale = a.amplitude * scales[k % scales.len()];
        let mut left: Vec<f64> = (0..=nt).map(|_| scale * rng.gen::<f64>()).collect();
        let mut right: Vec<f64> = (0..=nt).map(|_| scale * rng.gen::<f64>()).collect();
        left[0] = 0.0;
        right[0] = 0.0;
        let u = BoundaryControl::new(left, right)?;
        pairings.push(first_mode_after(lambda, &u, &grid, &tgrid)?.unwrap_or(f64::INFINITY));
    }
    let min = pairings.iter().copied().fold(f64::INFINITY, f64::min);
    let violations = pairings.iter().filter(|p| **p < floor).count();
    let summary = Obj::new()
        .num("lambda", lambda)
        .num("T", a.horizon)
        .int("nt", nt)
        .num("envelope", envelope)
        .num("floor", floor)
        .num("min_pairing", min)
        .int("violations", violations)
        .flag("holds", violations == 0)
        .raw("pairings", num_list(&pairings))
        .finish();
    write_opt(a.out.as_deref(), || summary.clone())?;
    Ok(summary)
}

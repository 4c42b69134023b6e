//! The full experiment set: both closed-form bounds, the linear and
//! semilinear minimal-time problems, and the mass sweep, with every headline
//! number checked against its acceptance band.

use std::path::Path;

use heatctrl_core::bounds::{lower_bound_decreasing, lower_bound_increasing};
use heatctrl_core::mintime::{sweep_csv, SweepRow};
use heatctrl_core::synth::control_csv;
use heatctrl_core::{
    mass_sweep, min_time_bisection, MinTimeProblem, MinTimeResult, Nonlinearity, Profile,
};

use crate::args::RecipeArgs;
use crate::commands::sweep_rows_json;
use crate::output::{array, num, precondition, write_atomic, CliError, CliResult, Obj};

pub const SWEEP_OFFSETS: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];

struct Row {
    name: &'static str,
    band: (f64, f64),
    value: Result<f64, String>,
}

impl Row {
    fn pass(&self) -> bool {
        matches!(self.value, Ok(v) if v >= self.band.0 && v <= self.band.1)
    }

    fn json(&self) -> String {
        let obj = Obj::new()
            .text("name", self.name)
            .raw(
                "band",
                format!("[{},{}]", num(self.band.0), num(self.band.1)),
            )
            .flag("pass", self.pass());
        match &self.value {
            Ok(v) => obj.num("value", *v).finish(),
            Err(e) => obj.raw("value", "null").text("error", e).finish(),
        }
    }
}

fn band(centre: f64, rel: f64) -> (f64, f64) {
    (centre * (1.0 - rel), centre * (1.0 + rel))
}

fn problem(f: Nonlinearity, a: f64, b: f64, args: &RecipeArgs) -> MinTimeProblem {
    let mut p = MinTimeProblem::new(f, Profile::Constant(a), Profile::Constant(b), args.nx);
    p.seed = args.seed;
    p.steer.budget = args.budget;
    p
}

fn min_time(p: &MinTimeProblem, args: &RecipeArgs, csv: &Path) -> CliResult<MinTimeResult> {
    let r = min_time_bisection(p, args.tol_t)?;
    write_atomic(csv, &control_csv(&r.control_at_tmin, &r.tgrid_at_tmin))?;
    Ok(r)
}

fn keep_io<T>(r: CliResult<T>) -> CliResult<Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ CliError::Io(_)) => Err(e),
        Err(e) => Ok(Err(e.to_string())),
    }
}

/// Runs every experiment; a failed row is marked and the rest still run.
pub fn run(args: &RecipeArgs) -> CliResult<String> {
    if args.nx < 2 || !(args.tol_t > 0.0) || args.budget == 0 {
        return Err(precondition(
            "recipe needs nx >= 2, tol-t > 0 and budget > 0",
        ));
    }
    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;

    let inc = lower_bound_increasing(1.0, 5.0)
        .map(|b| b.bound)
        .map_err(|e| e.to_string());
    let dec = lower_bound_decreasing(5.0, 1.0)
        .map(|b| b.bound)
        .map_err(|e| e.to_string());
    let analytic = inc.clone().unwrap_or(0.0);

    let lin = keep_io(min_time(
        &problem(Nonlinearity::Zero, 1.0, 5.0, args),
        args,
        &dir.join("linear_control.csv"),
    ))?;
    let sin = keep_io(min_time(
        &problem(Nonlinearity::SinPi, 1.0, 2.0, args),
        args,
        &dir.join("semilinear_control.csv"),
    ))?;

    let lin_band = band(0.0498, 0.25);
    let rows = [
        Row {
            name: "bound_increasing",
            band: (0.0250020 - 1e-6, 0.0250020 + 1e-6),
            value: inc,
        },
        Row {
            name: "bound_decreasing",
            band: (0.1630702 - 1e-6, 0.1630702 + 1e-6),
            value: dec,
        },
        Row {
            name: "linear_t_min",
            band: (lin_band.0.max(analytic), lin_band.1.min(0.075)),
            value: lin.as_ref().map(|r| r.t_min_estimate).map_err(Clone::clone),
        },
        Row {
            name: "semilinear_t_min",
            band: {
                let b = band(0.045197, 0.35);
                (b.0.max(0.01), b.1)
            },
            value: sin.as_ref().map(|r| r.t_min_estimate).map_err(Clone::clone),
        },
    ];

    let sweep = match &lin {
        Ok(r) => keep_io(
            mass_sweep(
                &problem(Nonlinearity::Zero, 1.0, 5.0, args),
                r.t_min_estimate,
                &SWEEP_OFFSETS,
            )
            .map_err(CliError::from),
        )?,
        Err(e) => Err(format!("skipped: {e}")),
    };
    if let Ok(s) = &sweep {
        write_atomic(&dir.join("sweep.csv"), &sweep_csv(s))?;
    }

    let headline: Vec<String> = rows.iter().map(Row::json).collect();
    let all_pass = rows.iter().all(Row::pass) && sweep.as_ref().is_ok_and(|s| sweep_ok(s));
    let summary = Obj::new()
        .int("nx", args.nx)
        .raw("seed", args.seed.to_string())
        .num("tol_t", args.tol_t)
        .raw("headline", array(&headline))
        .raw("sweep", sweep_json(&sweep))
        .flag("all_pass", all_pass)
        .finish();
    write_atomic(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Bounded masses over feasible rows and concentration at the smallest gap.
pub fn sweep_ok(rows: &[SweepRow]) -> bool {
    let feasible: Vec<&SweepRow> = rows.iter().filter(|r| r.feasible).collect();
    let (Some(first), Some(last)) = (rows.first(), feasible.last()) else {
        return false;
    };
    let masses: Vec<f64> = feasible.iter().map(|r| r.mass).collect();
    let max = masses.iter().copied().fold(0.0, f64::max);
    let min = masses.iter().copied().fold(f64::INFINITY, f64::min);
    masses.iter().all(|m| m.is_finite())
        && min > 0.0
        && max / min <= 10.0
        && last.sparsity >= first.sparsity
}

fn sweep_json(sweep: &Result<Vec<SweepRow>, String>) -> String {
    match sweep {
        Ok(rows) => Obj::new()
            .raw("offsets", crate::output::num_list(&SWEEP_OFFSETS))
            .raw("rows", sweep_rows_json(rows))
            .flag("pass", sweep_ok(rows))
            .finish(),
        Err(e) => Obj::new()
            .raw("rows", "[]")
            .flag("pass", false)
            .text("error", e)
            .finish(),
    }
}

//! Data specs on the command line.
//!
//! States: `<v>`, `const:<v>`, `sine:<a>,<b>` for `a + b sin(pi x)`, or
//! `file:<path>` for a CSV `x,y` with one row per node.
//! Controls: `<v>`, `const:<v>`, `const:<left>,<right>`, or `file:<path>` for
//! a CSV `t,u_left,u_right` whose time column fixes `T` and `nt`.

use std::f64::consts::PI;
use std::path::Path;

use heatctrl_core::{BoundaryControl, Grid1D, Nonlinearity, Profile, TimeGrid};

use crate::output::{precondition, read_text, CliError, CliResult};

pub fn nonlinearity(s: &str) -> CliResult<Nonlinearity> {
    Ok(s.parse::<Nonlinearity>()?)
}

fn number(s: &str) -> CliResult<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| precondition(format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(precondition(format!("value must be finite: {s:?}")));
    }
    Ok(v)
}

pub fn numbers(s: &str) -> CliResult<Vec<f64>> {
    s.split(',').map(number).collect()
}

/// `<v>` or `<left>,<right>`.
pub fn pair(s: &str) -> CliResult<(f64, f64)> {
    match numbers(s)?.as_slice() {
        [v] => Ok((*v, *v)),
        [l, r] => Ok((*l, *r)),
        _ => Err(precondition(format!(
            "expected <v> or <left>,<right>, got {s:?}"
        ))),
    }
}

enum StateSpec {
    Constant(f64),
    Sine(f64, f64),
    File(String),
}

fn state_spec(s: &str) -> CliResult<StateSpec> {
    let s = s.trim();
    if let Some(p) = s.strip_prefix("file:") {
        return Ok(StateSpec::File(p.to_string()));
    }
    if let Some(rest) = s.strip_prefix("sine:") {
        return match numbers(rest)?.as_slice() {
            [a, b] => Ok(StateSpec::Sine(*a, *b)),
            _ => Err(precondition(format!("expected sine:<a>,<b>, got {s:?}"))),
        };
    }
    let v = s.strip_prefix("const:").unwrap_or(s);
    Ok(StateSpec::Constant(number(v)?))
}

fn csv_rows(path: &Path, header: &[&str]) -> CliResult<Vec<Vec<f64>>> {
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let bad = |m: String| precondition(format!("{}: {m}", path.display()));
    let found = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(bad(format!(
            "expected header {}, found {}",
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let row = rec.iter().map(number).collect::<CliResult<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(bad(format!(
                "row {} has {} fields",
                rows.len() + 1,
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Nodal state on `grid`.
pub fn state(s: &str, grid: &Grid1D) -> CliResult<Vec<f64>> {
    match state_spec(s)? {
        StateSpec::Constant(v) => Ok(vec![v; grid.len()]),
        StateSpec::Sine(a, b) => {
            let mut y = grid.sample(|x| a + b * (PI * x).sin());
            // keep the corners exact so they match constant controls
            let n = grid.nx();
            y[0] = a;
            y[n] = a;
            Ok(y)
        }
        StateSpec::File(p) => {
            let rows = csv_rows(Path::new(&p), &["x", "y"])?;
            if rows.len() != grid.len() {
                return Err(CliError::Precondition(format!(
                    "{p}: {} rows, grid has {} nodes",
                    rows.len(),
                    grid.len()
                )));
            }
            Ok(rows.into_iter().map(|r| r[1]).collect())
        }
    }
}

/// Like [`state`], but constants stay symbolic so closed-form bounds apply.
pub fn profile(s: &str, grid: &Grid1D) -> CliResult<Profile> {
    match state_spec(s)? {
        StateSpec::Constant(v) => Ok(Profile::Constant(v)),
        _ => Ok(Profile::Nodes(state(s, grid)?)),
    }
}

#[derive(Debug)]
pub enum ControlSpec {
    Constant(f64, f64),
    File(BoundaryControl, TimeGrid),
}

pub fn control(s: &str) -> CliResult<ControlSpec> {
    let s = s.trim();
    if let Some(p) = s.strip_prefix("file:") {
        let rows = csv_rows(Path::new(p), &["t", "u_left", "u_right"])?;
        if rows.len() < 2 {
            return Err(precondition(format!(
                "{p}: control needs at least two rows"
            )));
        }
        let nt = rows.len() - 1;
        let horizon = rows[nt][0];
        let tgrid = TimeGrid::new(horizon, nt)?;
        let left = rows.iter().map(|r| r[1]).collect();
        let right = rows.iter().map(|r| r[2]).collect();
        return Ok(ControlSpec::File(BoundaryControl::new(left, right)?, tgrid));
    }
    let (l, r) = pair(s.strip_prefix("const:").unwrap_or(s))?;
    Ok(ControlSpec::Constant(l, r))
}

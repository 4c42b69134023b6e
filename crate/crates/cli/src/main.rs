#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;
mod recipe;
mod specs;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use output::{precondition, read_text, CliResult};

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("HEATCTRL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| precondition(format!("HEATCTRL_THREADS must be a count, got {raw:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| precondition(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Turns a config table into the equivalent command line.
fn config_argv(text: &str) -> Result<Vec<String>, String> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| e.message().to_string())?;
    let mut argv = vec!["heatctrl".to_string()];
    match table.get("command") {
        Some(toml::Value::String(c)) => argv.push(c.clone()),
        _ => return Err("missing string key `command`".into()),
    }
    for (key, value) in table.iter().filter(|(k, _)| *k != "command") {
        let v = match value {
            toml::Value::String(s) => s.clone(),
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(x) => format!("{x:?}"),
            toml::Value::Array(items) => {
                let parts: Result<Vec<String>, String> = items
                    .iter()
                    .map(|item| match item {
                        toml::Value::Integer(i) => Ok(i.to_string()),
                        toml::Value::Float(x) => Ok(format!("{x:?}")),
                        _ => Err(format!("`{key}`: arrays may hold numbers only")),
                    })
                    .collect();
                parts?.join(",")
            }
            _ => return Err(format!("`{key}`: unsupported value type")),
        };
        argv.push(format!("--{key}={v}"));
    }
    Ok(argv)
}

fn load_config(path: &std::path::Path) -> CliResult<Command> {
    let text = read_text(path)?;
    let diag = |m: String| precondition(format!("{}: {m}", path.display()));
    let argv = config_argv(&text).map_err(diag)?;
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        let rendered = e.render().to_string();
        diag(
            rendered
                .lines()
                .next()
                .unwrap_or("invalid config")
                .trim_start_matches("error: ")
                .to_string(),
        )
    })?;
    Ok(cli.command)
}

fn dispatch(cmd: Command) -> CliResult<String> {
    match cmd {
        Command::Simulate(a) => commands::simulate_cmd(&a),
        Command::Steady(a) => commands::steady_cmd(&a),
        Command::Staircase(a) => commands::staircase_cmd(&a),
        Command::Stabilize(a) => commands::stabilize_cmd(&a),
        Command::Mintime(a) => commands::mintime_cmd(&a),
        Command::Bound(a) => commands::bound_cmd(&a),
        Command::AdjointCheck(a) => commands::adjoint_check_cmd(&a),
        Command::SweepMass(a) => commands::sweep_mass_cmd(&a),
        Command::Counterexample(a) => commands::counterexample_cmd(&a),
        Command::Recipe(a) => recipe::run(&a),
        Command::Run(r) => match load_config(&r.config)? {
            Command::Run(_) => Err(precondition("a config file cannot run another config")),
            inner => dispatch(inner),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| dispatch(cli.command));
    match result {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("heatctrl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

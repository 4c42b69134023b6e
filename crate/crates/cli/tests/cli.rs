use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn heatctrl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_heatctrl"))
}

fn run(args: &[&str]) -> Output {
    heatctrl().args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn decreasing_bound_example() {
    let v = json_of(&run(&[
        "bound",
        "--case",
        "decreasing",
        "--y0",
        "5",
        "--y1",
        "1",
    ]));
    assert_eq!(v["case"], "decreasing");
    assert!((v["bound"].as_f64().unwrap() - 0.1630702).abs() <= 1e-6);
    let v = json_of(&run(&["bound", "--y0", "1", "--y1", "5"]));
    assert_eq!(v["case"], "increasing");
    assert!((v["bound"].as_f64().unwrap() - 0.0250020).abs() <= 1e-6);
    assert!((v["T0"].as_f64().unwrap() - v["bound"].as_f64().unwrap()).abs() <= 1e-15);
}

#[test]
fn steady_simulation_example() {
    let v = json_of(&run(&[
        "simulate", "--f", "sin_pi", "--y0", "const:1", "--u", "const:1", "--T", "1",
    ]));
    let row = v["terminal"].as_array().unwrap();
    assert_eq!(row.len(), 21);
    assert!(row
        .iter()
        .all(|y| (y.as_f64().unwrap() - 1.0).abs() <= 1e-12));
    assert_eq!(v["blew_up"], false);
}

#[test]
fn linear_mintime_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lin.json");
    let args = [
        "mintime", "--f", "linear", "--y0", "1", "--y1", "5", "--nx", "20", "--tol-t", "5e-3",
        "--out",
    ];
    let stdout = json_of(&run(&[&args[..], &[path_arg(&out)]].concat()));
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(file, stdout);
    let t = file["t_min"].as_f64().unwrap();
    assert!((0.0250020..=0.075).contains(&t), "{t}");
    assert_eq!(file["compatible"], true);
    let b = file["bracket"].as_array().unwrap();
    assert!(b[1].as_f64().unwrap() - b[0].as_f64().unwrap() <= 5e-3);
}

#[test]
fn staircase_controls_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let u = dir.path().join("u.csv");
    let meta = dir.path().join("meta.json");
    let m = json_of(&run(&[
        "staircase",
        "--f",
        "sin_pi",
        "--from",
        "1",
        "--to",
        "2",
        "--out",
        path_arg(&u),
        "--meta",
        path_arg(&meta),
    ]));
    let header = std::fs::read_to_string(&u).unwrap();
    assert!(header.starts_with("t,u_left,u_right\n"));
    let recorded = m["terminal_mismatch"].as_f64().unwrap();
    assert!(m["min_control_value"].as_f64().unwrap() >= 0.0);

    let spec = format!("file:{}", u.display());
    let v = json_of(&run(&[
        "simulate", "--f", "sin_pi", "--y0", "1", "--u", &spec, "--target", "2",
    ]));
    let again = v["terminal_mismatch"].as_f64().unwrap();
    assert!((again - recorded).abs() <= 1e-12, "{again} vs {recorded}");
    assert_eq!(v["T"].as_f64().unwrap(), m["total_time"].as_f64().unwrap());
}

#[test]
fn stabilize_controls_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let u = dir.path().join("u.csv");
    let m = json_of(&run(&[
        "stabilize",
        "--T",
        "1.5",
        "--tau",
        "0.5",
        "--out",
        path_arg(&u),
    ]));
    assert_eq!(m["nonnegative"], true);
    let spec = format!("file:{}", u.display());
    let v = json_of(&run(&[
        "simulate", "--f", "sin_pi", "--y0", "sine:1,1", "--u", &spec, "--target", "2",
    ]));
    let recorded = m["terminal_mismatch"].as_f64().unwrap();
    assert!((v["terminal_mismatch"].as_f64().unwrap() - recorded).abs() <= 1e-12);
}

#[test]
fn exit_codes() {
    let bad = run(&["simulate", "--y0", "sine:1"]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&bad.stderr).lines().count(), 1);
    assert_eq!(run(&["bound", "--y0", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["bound", "--case", "sideways"]).status.code(), Some(2));
    assert_eq!(
        run(&["simulate", "--nx", "20", "--T", "0.1", "--nt", "10"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));

    let io = run(&["bound", "--out", "/no/such/dir/b.json"]);
    assert_eq!(io.status.code(), Some(4));
    assert_eq!(String::from_utf8_lossy(&io.stderr).lines().count(), 1);
    assert_eq!(
        run(&["simulate", "--u", "file:/no/such/u.csv"])
            .status
            .code(),
        Some(4)
    );

    let solver = run(&[
        "staircase",
        "--f",
        "zero",
        "--from",
        "0.01",
        "--to",
        "5",
        "--steps",
        "1",
        "--t-step",
        "0.01",
        "--max-refinement",
        "2",
    ]);
    assert_eq!(
        solver.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&solver.stderr)
    );
}

#[test]
fn config_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "command = \"bound\"\ncase = \"decreasing\"\ny0 = 5.0\ny1 = 1\n",
    )
    .unwrap();
    let from_file = run(&["run", "--config", path_arg(&cfg)]);
    let from_flags = run(&["bound", "--case", "decreasing", "--y0", "5", "--y1", "1"]);
    assert!(from_file.status.success());
    assert_eq!(from_file.stdout, from_flags.stdout);

    std::fs::write(
        &cfg,
        "command = \"sweep-mass\"\nt-min = 0.05\noffsets = [0.2, 0.1]\nbudget = 300\n",
    )
    .unwrap();
    let v = json_of(&run(&["run", "--config", path_arg(&cfg)]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);

    std::fs::write(
        &cfg,
        "command = \"counterexample\"\nc = -25.0\ntrials = 2\n",
    )
    .unwrap();
    assert_eq!(
        json_of(&run(&["run", "--config", path_arg(&cfg)]))["lambda"],
        25.0
    );

    for bad in [
        "command = \"bound\"\nfoo = 1\n",
        "command = \"nope\"\n",
        "case = \"decreasing\"\n",
        "command = \"run\"\nconfig = \"x.toml\"\n",
        "command = \"bound\"\ny0 = [\n",
    ] {
        std::fs::write(&cfg, bad).unwrap();
        let out = run(&["run", "--config", path_arg(&cfg)]);
        assert_eq!(out.status.code(), Some(2), "{bad:?}");
    }
    assert_eq!(
        run(&["run", "--config", "/no/such.toml"]).status.code(),
        Some(4)
    );
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("s{k}.json"));
        let u = dir.path().join(format!("u{k}.csv"));
        let status = heatctrl()
            .args([
                "mintime", "--f", "sin_pi", "--y0", "1", "--y1", "2", "--tol-t", "1e-2", "--seed",
                "7",
            ])
            .args(["--out", path_arg(&out), "--control-out", path_arg(&u)])
            .env("HEATCTRL_THREADS", if k == 0 { "1" } else { "0" })
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        files.push((std::fs::read(&out).unwrap(), std::fs::read(&u).unwrap()));
    }
    assert_eq!(files[0], files[1]);

    let bad = heatctrl()
        .args(["bound"])
        .env("HEATCTRL_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn adjoint_check_reports_duality() {
    let v = json_of(&run(&[
        "adjoint-check",
        "--nx",
        "20",
        "--nt",
        "200",
        "--T",
        "0.1",
    ]));
    assert!(v["duality_residual"].as_f64().unwrap().abs() <= 5e-3);
    assert!(v["transposition_defect"].as_f64().unwrap() <= 1e-12);
    let v = json_of(&run(&[
        "adjoint-check",
        "--nx",
        "40",
        "--nt",
        "200",
        "--T",
        "0.05",
        "--phi",
        "two-mode",
    ]));
    let flip = v["flux_sign_flip"].as_f64().unwrap();
    let window = 3.0_f64.ln() / (8.0 * std::f64::consts::PI.powi(2));
    assert!((0.05 - flip - window).abs() <= 2.0 * 0.05 / 200.0, "{flip}");
}

#[test]
fn steady_writes_path_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("path.csv");
    let meta = dir.path().join("path.json");
    let v = json_of(&run(&[
        "steady",
        "--steps",
        "4",
        "--out",
        path_arg(&csv),
        "--meta",
        path_arg(&meta),
    ]));
    assert_eq!(v["nu"], 1.0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("s,x,y\n"));
    assert_eq!(text.lines().count(), 1 + 5 * 21);
}

#[test]
fn coarse_recipe_is_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rec");
    let v = json_of(&run(&["recipe", "--nx", "10", "--out-dir", path_arg(&out)]));
    let rows = v["headline"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert!(r["pass"].is_boolean());
        assert!(r["name"].is_string());
    }
    assert_eq!(rows[0]["pass"], true);
    assert_eq!(rows[1]["pass"], true);
    let file: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(file, v);
}

use std::path::Path;
use std::process::{Command, Output};

fn blowlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blowlab")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const SMALL: &str = r#"
n = 1
p = 3.0
q = 3.0
eps = 0.5
horizon = 12.0

[damping.b1]
kind = "power_tail"
mu = 1.0
beta = 2.0

[damping.b2]
kind = "power_tail"
mu = 1.0
beta = 2.0

[grid]
h = 0.02
levels = 1

[snapshots]
dt = 0.02
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn classify_reports_regimes() {
    let v = json(&blowlab(&["classify", "--n", "3", "--p", "2", "--q", "2"]));
    assert_eq!(v["regime"], "critical_diagonal");
    assert_eq!(v["upsilon"], 0.0);
    let v = json(&blowlab(&["classify", "--n", "2", "--p", "2", "--q", "2"]));
    assert_eq!(v["regime"], "subcritical");
    assert_eq!(v["upsilon"], 0.5);
    let v = json(&blowlab(&["classify", "--n", "3", "--p", "7/3", "--q", "13/7", "--exact"]));
    assert_eq!(v["regime"], "critical_off_diagonal");
}

#[test]
fn bad_arguments_exit_with_one() {
    let out = blowlab(&["classify", "--n", "3", "--p", "0.5", "--q", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_then_audit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let run = dir.path().join("run");
    let out = blowlab(&["solve", "--config", &cfg, "--out", run.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["config.toml", "snapshots.csv", "summary.json"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let summary = blowlab::io::read_summary(&run).unwrap();
    assert!(summary.outcome.t_blowup.is_some());
    assert!(summary.propagation.passes());

    let out = blowlab(&["audit", "--run", run.to_str().unwrap()]);
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert!(run.join("audit.json").exists());
    let traces = std::fs::read_to_string(run.join("traces.csv")).unwrap();
    assert!(traces.lines().next().unwrap().starts_with("t,U1,V1,F,G,margin_"));
}

#[test]
fn frame_sweep_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("sweep");
    let out = blowlab(&[
        "sweep", "--config", &cfg, "--engine", "frame", "--eps-from", "1e-2", "--eps-to", "1e-4", "--points", "6", "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(rep["pass"], true);
    assert_eq!(rep["audits"]["present"], false);
    assert!((rep["fit"]["slope"].as_f64().unwrap() + 2.0).abs() < 0.05);
    assert!(out_dir.join("scaling.svg").exists() && out_dir.join("scaling.csv").exists());
}

#[test]
fn increasing_plan_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = blowlab(&["sweep", "--config", &cfg, "--eps-from", "1e-4", "--eps-to", "1e-2", "--out", dir.path().join("s").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

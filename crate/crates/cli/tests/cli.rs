//! End-to-end checks of the `ep-sim` binary: exit codes, file outputs,
//! and byte-for-byte determinism of the CSV.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ep-sim"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn short_scenario(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("scenario.json");
    let mut v: serde_json::Value = serde_json::from_str(ep_sim::PAPER_SIM_JSON).unwrap();
    v["duration"] = serde_json::json!(1.0);
    std::fs::write(&path, v.to_string()).unwrap();
    path
}

#[test]
fn version_flag_reports_the_package_version() {
    let out = run(&["--version"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(env!("CARGO_PKG_VERSION")), "{text}");
}

#[test]
fn simulate_writes_csv_and_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = short_scenario(dir.path());
    let csv = dir.path().join("out.csv");
    let plot = dir.path().join("out.gp");
    let out = run(&[
        "simulate",
        scenario.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
        "--plot",
        plot.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), ep_sim::sim::CSV_HEADER);
    assert_eq!(lines.count(), 101); // 1 s at 10 ms, plus the initial record

    let script = std::fs::read_to_string(&plot).unwrap();
    assert!(script.contains("multiplot"));
    assert!(script.contains(csv.to_str().unwrap()));
}

#[test]
fn repeated_runs_produce_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = short_scenario(dir.path());
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let status = run(&[
            "simulate",
            scenario.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(status.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn invalid_scenarios_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut v: serde_json::Value = serde_json::from_str(ep_sim::PAPER_SIM_JSON).unwrap();
    v["dt"] = serde_json::json!(-0.01);
    std::fs::write(&path, v.to_string()).unwrap();
    let out = run(&[
        "simulate",
        path.to_str().unwrap(),
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("dt"), "{err}");

    // Missing file is also a validation failure.
    let out = run(&[
        "simulate",
        dir.path().join("nope.json").to_str().unwrap(),
        "--out",
        dir.path().join("y.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_group_axioms_passes_and_prints_residuals() {
    let out = run(&["verify", "group-axioms", "--seed", "7"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("suite group-axioms (seed 7)"));
    assert!(text.contains("[PASS]"));
    assert!(text.contains("threshold"));
    assert!(text.contains("all checks passed"));
}

#[test]
fn verify_rejects_unknown_suites() {
    let out = run(&["verify", "bogus"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("unknown suite"), "{err}");
    assert!(err.contains("group-axioms"), "{err}");
}

use std::path::Path;
use std::process::{Command, Output};

fn enskog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enskog")).args(args).output().unwrap()
}

const SMALL: &str = "grid.n_x = 3\ngrid.n_p = 3\ngrid.n_omega = 8\ngrid.n_t = 3\ngrid.t_max = 1.0\ngrid.quad_order = 3\n";

fn scenario(dir: &Path, extra: &str) -> String {
    let path = dir.join("scenario.toml");
    let out = dir.join("out");
    std::fs::write(&path, format!("output_dir = {:?}\n{SMALL}{extra}", out.display().to_string())).unwrap();
    path.display().to_string()
}

#[test]
fn zero_data_converges_in_one_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "initial_data.kind = \"zero\"\n");
    let out = enskog(&["solve", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["iterations"], 1);
    assert_eq!(summary["final_residual"], 0.0);
    for file in ["diagnostics.csv", "header.json", "trajectory.bin", "report.json"] {
        assert!(dir.path().join("out").join(file).exists(), "{file}");
    }
}

#[test]
fn oversized_data_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "initial_data.amplitude = 100.0\n");
    assert_eq!(enskog(&["solve", &cfg]).status.code(), Some(2));
}

#[test]
fn iteration_cap_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "solver.max_iter = 1\nsolver.tol = 1e-300\n");
    assert_eq!(enskog(&["solve", &cfg]).status.code(), Some(3));
    assert!(dir.path().join("out/diagnostics.csv").exists());
}

#[test]
fn invalid_key_exits_with_1_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "kernel.delta = 2.0\n");
    let out = enskog(&["solve", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kernel.delta"));
}

#[test]
fn check_hypotheses_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "");
    let out = enskog(&["check-hypotheses", &cfg, "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert!(report["hypotheses"]["K"].as_f64().unwrap() > 0.0);
    assert_eq!(report["hypotheses"]["seed"], 4);
    assert_eq!(report["galeano"]["bound_at_zero"], 0.0);
    assert!(report["galeano"]["uniform_radii"].is_null());
}

#[test]
fn kinematics_selftest_prints_small_deviations() {
    let out = enskog(&["kinematics-selftest", "--samples", "20000"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let momentum: f64 = text
        .lines()
        .find(|l| l.starts_with("momentum"))
        .and_then(|l| l.split_whitespace().last())
        .unwrap()
        .parse()
        .unwrap();
    assert!(momentum < 1e-10);
}

#[test]
fn boltzmann_limit_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "y.kind = \"constant\"\n");
    let out = enskog(&["boltzmann-limit", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/boltzmann_limit.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn zosaddle(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zosaddle"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn search(n_x: usize) -> Value {
    json!({
        "k": 1, "n_x_max": n_x,
        "alpha_x": {"kind": "constant", "alpha": 1e-4},
        "length": {"kind": "constant", "l": 1e-3},
        "inner": {
            "k": 1, "n_v_max": 10,
            "alpha_v": {"kind": "constant", "alpha": 2e-4},
            "length": {"kind": "constant", "l": 1e-3}
        }
    })
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn mb_run(replicas: usize) -> Value {
    json!({
        "benchmark": {"name": "muller_brown"},
        "x0": [0.0, 1.0],
        "search": search(50),
        "replicas": replicas,
        "output": {"dir": "from_config", "prefix": "mb"}
    })
}

#[test]
fn run_writes_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", &mb_run(2));
    let out = zosaddle(&["run", &cfg, "--jobs", "1", "--seed-base", "5", "--quiet"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let base = dir.path().join("from_config");
    assert!(base.join("mb_seed5.csv").is_file());
    assert!(base.join("mb_seed6.csv").is_file());
    let summary: Value = serde_json::from_str(&fs::read_to_string(base.join("mb_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seeds"], json!([5, 6]));
    assert_eq!(summary["failures"], json!(0));
}

#[test]
fn out_flag_and_config_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", &mb_run(1));
    let out = zosaddle(&["run", "--config", &cfg, "--out", "elsewhere", "--quiet"], dir.path());
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("elsewhere/mb_seed0.csv").is_file());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&zosaddle(&["run"], dir.path())), 2);
    assert_eq!(code(&zosaddle(&["run", "missing.json"], dir.path())), 2);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&zosaddle(&["run", bad.to_str().unwrap()], dir.path())), 2);
    let mut unknown = mb_run(1);
    unknown["benchmark"] = json!({"name": "himmelblau"});
    let cfg = write(dir.path(), "unknown.json", &unknown);
    assert_eq!(code(&zosaddle(&["run", &cfg], dir.path())), 2);
    let mut wrong_dim = mb_run(1);
    wrong_dim["x0"] = json!([0.0, 1.0, 2.0]);
    let cfg = write(dir.path(), "dim.json", &wrong_dim);
    assert_eq!(code(&zosaddle(&["run", &cfg], dir.path())), 2);
}

#[test]
fn diverging_replicas_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = json!({
        "benchmark": {"name": "quadratic", "matrix": [[1.0, 0.0], [0.0, -1.0]]},
        "x0": [1.0, 1.0],
        "search": search(200),
        "replicas": 2
    });
    cfg["search"]["alpha_x"] = json!({"kind": "constant", "alpha": 10.0});
    let path = write(dir.path(), "div.json", &cfg);
    let out = zosaddle(&["run", &path, "--out", "o", "--quiet"], dir.path());
    assert_eq!(code(&out), 1);
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/run_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["failures"], json!(2));
    assert_eq!(summary["replicas"][0]["termination"]["status"], json!("diverged"));
}

#[test]
fn table_writes_rungs_and_ladder_summary() {
    let dir = tempfile::tempdir().unwrap();
    let ladder = json!({
        "base": mb_run(2),
        "lengths": [0.004, 0.002, 0.001],
        "alphas": [1e-4]
    });
    let path = write(dir.path(), "ladder.json", &ladder);
    let out = zosaddle(&["table", &path, "--out", "t"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("plateau"));
    assert!(dir.path().join("t/ladder_summary.json").is_file());
    assert!(dir.path().join("t/l0.002_alpha0.0001/run_seed0.csv").is_file());
}

#[test]
fn baseline_runs_the_deterministic_search() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "benchmark": {"name": "mod_rosenbrock", "d": 2, "s": [-50.0, 1.0]},
        "x0": [1.05, 0.98],
        "k": 1,
        "alpha": {"kind": "constant", "alpha": 1e-3},
        "n_max": 300
    });
    let path = write(dir.path(), "base.json", &cfg);
    let out = zosaddle(&["baseline", &path, "--out", "b", "--quiet"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("b/baseline.csv")).unwrap();
    assert!(csv.starts_with("n,x_0,x_1,dist_sq,grad_norm_sq,cumulative_evals"));
    assert_eq!(csv.lines().count(), 302);
}

#[test]
fn variance_and_estimator_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"family": {"kind": "identity"}, "dims": [2, 5], "samples": 200, "l": 1e-3});
    let path = write(dir.path(), "var.json", &cfg);
    let out = zosaddle(&["variance", &path, "--out", "v"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("v/variance.json")).unwrap()).unwrap();
    assert_eq!(rows["rows"].as_array().unwrap().len(), 2);

    let out = zosaddle(&["estimator-check", "--samples", "20000"], dir.path());
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}

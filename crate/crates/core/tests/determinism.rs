//! Reproducibility of experiment output and the CLI contract.

use std::path::Path;
use std::process::Command;

use online_cov::harness::output::{render, to_csv};
use online_cov::harness::rates::RATES_HEADER;
use online_cov::harness::{run_cv_rho, run_rates, ExperimentConfig, ExperimentKind, OutputFormat};

const BIN: &str = env!("CARGO_BIN_EXE_online-cov");

fn small_rates(workers: &str) -> ExperimentConfig {
    let flags = [
        ("d", "3"),
        ("alphas", "0.55,0.7"),
        ("ns", "300,1000"),
        ("reps", "4"),
        ("workers", workers),
    ];
    let flags: Vec<(String, String)> = flags
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    ExperimentConfig::load(ExperimentKind::Rates, None, &flags).unwrap()
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(BIN)
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .unwrap()
}

#[test]
fn rates_rerun_is_bitwise_identical() {
    let cfg = small_rates("2");
    let a = to_csv(&run_rates(&cfg).unwrap(), RATES_HEADER);
    let b = to_csv(&run_rates(&cfg).unwrap(), RATES_HEADER);
    assert_eq!(a, b);
    assert!(a.starts_with(
        "experiment,alpha,n,estimator,rho,beta,p,rep,seed,op_error,degenerate,wall_ms\n"
    ));
}

#[test]
fn worker_count_does_not_change_output() {
    let serial = run_rates(&small_rates("1")).unwrap();
    let parallel = run_rates(&small_rates("3")).unwrap();
    assert_eq!(to_csv(&serial, RATES_HEADER), to_csv(&parallel, RATES_HEADER));
    assert_eq!(
        render(&serial, OutputFormat::Json, RATES_HEADER).unwrap(),
        render(&parallel, OutputFormat::Json, RATES_HEADER).unwrap()
    );
}

#[test]
fn cv_is_deterministic_across_workers() {
    let load = |w: &str| {
        let flags: Vec<(String, String)> = [("d", "3"), ("ns", "5000"), ("reps", "3"), ("workers", w)]
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        ExperimentConfig::load(ExperimentKind::CvRho, None, &flags).unwrap()
    };
    assert_eq!(run_cv_rho(&load("1")).unwrap(), run_cv_rho(&load("4")).unwrap());
}

#[test]
fn cli_writes_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let path = dir.path().join(name);
        let out = cli(&[
            "rates", "--d", "2", "--alphas", "0.6", "--ns", "500", "--reps", "3",
            "--seed", "7", "--workers", workers, "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(path).unwrap()
    };
    let first = run("a.csv", "1");
    assert_eq!(first, run("b.csv", "1"));
    assert_eq!(first, run("c.csv", "3"));
}

#[test]
fn cli_config_file_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("iid.toml");
    std::fs::write(&config, "d = 2\nns = [100, 400]\nreps = 2\nseed = 3\n").unwrap();
    let out = cli(&["iid-baseline", "--config", config.to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 4);
}

#[test]
fn cli_bias_variance_header() {
    let out = cli(&["bias-variance", "--d", "2", "--ns", "2000", "--reps", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("m,a_m,bias,variance"));
}

#[test]
fn cli_config_errors_exit_2() {
    assert_eq!(cli(&["rates", "--alphas", "1.5"]).status.code(), Some(2));
    assert_eq!(cli(&["rates", "--reps", "many"]).status.code(), Some(2));
    assert_eq!(cli(&["coverage", "--level", "1.2"]).status.code(), Some(2));
    let missing = Path::new("/nonexistent/online-cov.toml");
    assert_eq!(
        cli(&["minimax", "--config", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "not_a_key = 1\n").unwrap();
    assert_eq!(cli(&["rates", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn cli_numerical_failure_exits_3() {
    // 8 pairs cannot identify a 10-dimensional Hessian
    let out = cli(&[
        "rates", "--d", "10", "--alphas", "0.55", "--ns", "8", "--reps", "3",
        "--estimators", "regression",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let out = cli(&["coverage", "--ns", "8", "--reps", "3", "--estimators", "regression"]);
    assert_eq!(out.status.code(), Some(3));
}

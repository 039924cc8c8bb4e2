//! Runs every example binary that cargo built next to this test.

use std::path::PathBuf;
use std::process::Command;

const EXAMPLES: [&str; 8] = [
    "quadratic_sgd",
    "batch_means",
    "weighted_and_cv",
    "trajectory_regression",
    "minimax_lab",
    "confidence_ellipsoid",
    "rate_experiment",
    "iid_baseline",
];

fn examples_dir() -> PathBuf {
    // target/<profile>/deps/<test> → target/<profile>/examples
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().join("examples")
}

#[test]
fn examples_run_cleanly() {
    let dir = examples_dir();
    let missing: Vec<&str> = EXAMPLES
        .iter()
        .copied()
        .filter(|e| !dir.join(e).exists())
        .collect();
    if !missing.is_empty() {
        eprintln!("examples not built in {}, skipping: {missing:?}", dir.display());
        return;
    }
    for name in EXAMPLES {
        let out = Command::new(dir.join(name)).output().unwrap();
        assert!(
            out.status.success(),
            "{name} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stdout.is_empty(), "{name} printed nothing");
    }
}

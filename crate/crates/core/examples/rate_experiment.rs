//! A small replicated rate experiment with fitted decay exponents.

use online_cov::harness::{fit_slope, run_rates, summarize, ExperimentConfig, ExperimentKind};
use online_cov::harness::output::to_csv;
use online_cov::harness::rates::RATES_HEADER;

fn main() -> online_cov::Result<()> {
    let overrides: Vec<(String, String)> = [
        ("d", "4"),
        ("alphas", "0.55"),
        ("ns", "1000,4000,16000"),
        ("reps", "20"),
        ("estimators", "regression,bm_burnin,bm_original"),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    let cfg = ExperimentConfig::load(ExperimentKind::Rates, None, &overrides)?;
    let rows = run_rates(&cfg)?;
    for s in summarize(&rows) {
        println!("n = {:>6} {:<12} mean error {:.4} ± {:.4}", s.n, s.estimator, s.mean, s.std_error);
    }
    for e in ["regression", "bm_burnin", "bm_original"] {
        println!("{e}: slope {:.3}", fit_slope(&rows, e, 0.55)?.slope);
    }
    let csv = to_csv(&rows, RATES_HEADER);
    println!("{} CSV lines, header: {}", csv.lines().count(), csv.lines().next().unwrap_or(""));
    Ok(())
}

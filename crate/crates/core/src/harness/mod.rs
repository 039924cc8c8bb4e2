//! Replicated experiments with deterministic, order-independent output.
//!
//! Replication `r` of grid point `g` draws from its own stream keyed by
//! `(seed, g, r)`, rows are sorted before output, and the worker count never
//! changes a number.

pub mod bias_variance;
pub mod config;
pub mod coverage;
pub mod cv;
pub mod iid;
pub mod minimax;
pub mod output;
pub mod rates;

use serde::Serialize;

use crate::error::{Error, Result};

pub use bias_variance::{run_bias_variance, BiasVarianceResult, BlockRow};
pub use config::{ExperimentConfig, ExperimentKind, OutputFormat};
pub use coverage::{run_coverage, CoverageRow};
pub use cv::{run_cv_rho, CvRow};
pub use iid::{run_iid_baseline, IidRow};
pub use minimax::{run_minimax, MinimaxRow};
pub use rates::{fit_slope, numerical_failures, run_rates, summarize, RateRow, RateSummary};

/// Runs `f` on a pool of `workers` threads (0 picks the core count).
pub fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Seed of replication `rep` at grid point `point`.
pub fn replication_seed(base: u64, point: u64, rep: u64) -> u64 {
    let mut z = splitmix64(base ^ splitmix64(point.wrapping_add(0x5851_f42d_4c95_7f2d)));
    z = splitmix64(z ^ rep);
    z
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    /// Decay exponent: the negated least-squares slope of `log err` on `log n`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares power law `err ≈ e^{intercept} n^{−slope}`.
pub fn fit_power_law(ns: &[f64], errors: &[f64]) -> Result<SlopeFit> {
    if ns.len() != errors.len() {
        return Err(Error::DimensionMismatch {
            expected: ns.len(),
            found: errors.len(),
        });
    }
    let mut distinct: Vec<f64> = ns.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "slope fit needs at least 3 distinct n, have {}",
            distinct.len()
        )));
    }
    if ns.iter().chain(errors).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::domain("slope fit needs positive finite values"));
    }
    let xs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { b * sxy / syy };
    Ok(SlopeFit {
        slope: -b,
        intercept: my - b * mx,
        r_squared,
        points: xs.len(),
    })
}

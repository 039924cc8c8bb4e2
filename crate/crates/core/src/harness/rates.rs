//! Operator-norm error of every estimator over an `(α, n)` grid.
//!
//! Each replication is one trajectory up to the largest horizon it serves;
//! estimators are queried at every smaller horizon on the way.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::batch_means::mixing_ok;
use crate::error::Result;
use crate::estimators::EstimatorBank;
use crate::harness::config::ExperimentConfig;
use crate::harness::output::{fmt_bool, fmt_f64, CsvRecord};
use crate::harness::{fit_power_law, replication_seed, with_pool, SlopeFit};
use crate::linalg::{operator_norm, Vector};
use crate::rng::RngStream;
use crate::sgd::Trajectory;

pub const RATES_HEADER: &str =
    "experiment,alpha,n,estimator,rho,beta,p,rep,seed,op_error,degenerate,wall_ms";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub experiment: String,
    pub alpha: f64,
    pub n: usize,
    pub estimator: String,
    pub rho: f64,
    pub beta: f64,
    pub p: f64,
    pub rep: usize,
    pub seed: u64,
    pub op_error: f64,
    pub degenerate: bool,
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixing_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip)]
    order: (usize, usize),
}

impl CsvRecord for RateRow {
    fn header(&self) -> String {
        let mut h = RATES_HEADER.to_string();
        if self.mixing_ok.is_some() {
            h.push_str(",mixing_ok,gamma");
        }
        h
    }

    fn fields(&self) -> Vec<String> {
        let mut f = vec![
            self.experiment.clone(),
            fmt_f64(self.alpha),
            self.n.to_string(),
            self.estimator.clone(),
            fmt_f64(self.rho),
            fmt_f64(self.beta),
            fmt_f64(self.p),
            self.rep.to_string(),
            self.seed.to_string(),
            fmt_f64(self.op_error),
            fmt_bool(self.degenerate),
            fmt_f64(self.wall_ms),
        ];
        if let Some(ok) = self.mixing_ok {
            f.push(fmt_bool(ok));
            f.push(fmt_f64(self.gamma.unwrap_or(f64::NAN)));
        }
        f
    }
}

pub fn run_rates(cfg: &ExperimentConfig) -> Result<Vec<RateRow>> {
    let problem = cfg.problem()?;
    let truth = problem.true_covariance()?;
    let specs = cfg.estimator_specs()?;
    let mut ns = cfg.ns.clone();
    ns.sort_unstable();
    ns.dedup();
    let max_reps = ns.iter().map(|&n| cfg.reps_for(n)).max().unwrap_or(0);
    let x0 = Vector::zeros(cfg.d);

    let mut jobs = Vec::new();
    for ai in 0..cfg.alphas.len() {
        for rep in 0..max_reps {
            jobs.push((ai, rep));
        }
    }

    let run_job = |&(ai, rep): &(usize, usize)| -> Result<Vec<RateRow>> {
        let alpha = cfg.alphas[ai];
        let schedule = cfg.schedule(alpha)?;
        let seed = replication_seed(cfg.seed, ai as u64, rep as u64);
        let mut rng = RngStream::new(seed, 0);
        let mut bank = EstimatorBank::new(&specs, alpha, &x0)?;
        let mut traj = Trajectory::new(&problem, &schedule, &x0, &mut rng);
        let start = Instant::now();
        let mut rows = Vec::new();
        for &n in ns.iter().filter(|&&n| rep < cfg.reps_for(n)) {
            traj.advance_to(n, &mut [&mut bank])?;
            for (si, spec) in specs.iter().enumerate() {
                let est = bank.estimate(spec, &truth);
                let op_error = est
                    .matrix
                    .as_ref()
                    .map(|m| operator_norm(&m.sub(&truth)))
                    .unwrap_or(f64::NAN);
                let (rho, beta, p) = spec.reported_params(alpha);
                let mixing = (cfg.allow_nonmixing && spec.kind.is_batch_means())
                    .then(|| mixing_ok(alpha, beta));
                rows.push(RateRow {
                    experiment: "rates".to_string(),
                    alpha,
                    n,
                    estimator: spec.label().to_string(),
                    rho,
                    beta,
                    p,
                    rep,
                    seed,
                    op_error,
                    degenerate: est.degenerate,
                    wall_ms: if cfg.timing {
                        start.elapsed().as_secs_f64() * 1e3
                    } else {
                        0.0
                    },
                    mixing_ok: mixing.map(|m| m.ok),
                    gamma: mixing.map(|m| m.gamma),
                    order: (ai, si),
                });
            }
        }
        Ok(rows)
    };

    let chunks: Vec<Result<Vec<RateRow>>> =
        with_pool(cfg.workers, || jobs.par_iter().map(run_job).collect())?;
    let mut rows = Vec::new();
    for c in chunks {
        rows.extend(c?);
    }
    rows.sort_by_key(|r| (r.order.0, r.n, r.order.1, r.rep));
    if cfg.allow_nonmixing {
        // keep one layout for the whole file
        for r in &mut rows {
            if r.mixing_ok.is_none() {
                r.mixing_ok = Some(true);
                r.gamma = Some(f64::NAN);
            }
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateSummary {
    pub alpha: f64,
    pub n: usize,
    pub estimator: String,
    /// Mean over replications with a finite error.
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
    pub degenerate: usize,
    pub reps: usize,
}

/// Per `(α, n, estimator)` averages, in row order.
pub fn summarize(rows: &[RateRow]) -> Vec<RateSummary> {
    type Key = (u64, usize, String);
    let mut groups: Vec<(Key, Vec<&RateRow>)> = Vec::new();
    let mut index: BTreeMap<Key, usize> = BTreeMap::new();
    for r in rows {
        let key = (r.alpha.to_bits(), r.n, r.estimator.clone());
        match index.get(&key) {
            Some(&i) => groups[i].1.push(r),
            None => {
                index.insert(key.clone(), groups.len());
                groups.push((key, vec![r]));
            }
        }
    }
    groups
        .into_iter()
        .map(|((_, n, estimator), rs)| {
            let errs: Vec<f64> = rs.iter().map(|r| r.op_error).filter(|e| e.is_finite()).collect();
            let k = errs.len() as f64;
            let mean = errs.iter().sum::<f64>() / k;
            let var = if errs.len() > 1 {
                errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0)
            } else {
                f64::NAN
            };
            RateSummary {
                alpha: rs[0].alpha,
                n,
                estimator,
                mean,
                std_error: (var / k).sqrt(),
                count: errs.len(),
                degenerate: rs.iter().filter(|r| r.degenerate).count(),
                reps: rs.len(),
            }
        })
        .collect()
}

/// Decay exponent of the mean error of `estimator` at `alpha`.
pub fn fit_slope(rows: &[RateRow], estimator: &str, alpha: f64) -> Result<SlopeFit> {
    let (ns, errs): (Vec<f64>, Vec<f64>) = summarize(rows)
        .into_iter()
        .filter(|s| s.estimator == estimator && s.alpha == alpha && s.count > 0)
        .map(|s| (s.n as f64, s.mean))
        .unzip();
    fit_power_law(&ns, &errs)
}

/// Grid points where every replication was degenerate.
pub fn numerical_failures(rows: &[RateRow]) -> Vec<String> {
    summarize(rows)
        .into_iter()
        .filter(|s| s.degenerate == s.reps)
        .map(|s| format!("{} at alpha = {}, n = {}", s.estimator, s.alpha, s.n))
        .collect()
}

//! Coverage of confidence ellipsoids over an `(α, n, estimator)` grid.

use serde::Serialize;

use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::output::{fmt_f64, CsvRecord};
use crate::harness::{replication_seed, with_pool};
use crate::inference::coverage_experiment;

pub const COVERAGE_HEADER: &str =
    "alpha,n,estimator,level,reps,covered,degenerate,failed,coverage,std_error,coverage_clean";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageRow {
    pub alpha: f64,
    pub n: usize,
    pub estimator: String,
    pub level: f64,
    pub reps: usize,
    pub covered: usize,
    pub degenerate: usize,
    pub failed: usize,
    pub coverage: f64,
    pub std_error: f64,
    pub coverage_clean: f64,
}

impl CsvRecord for CoverageRow {
    fn header(&self) -> String {
        COVERAGE_HEADER.to_string()
    }

    fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.alpha),
            self.n.to_string(),
            self.estimator.clone(),
            fmt_f64(self.level),
            self.reps.to_string(),
            self.covered.to_string(),
            self.degenerate.to_string(),
            self.failed.to_string(),
            fmt_f64(self.coverage),
            fmt_f64(self.std_error),
            fmt_f64(self.coverage_clean),
        ]
    }
}

impl CoverageRow {
    /// No replication produced a usable ellipsoid.
    pub fn all_degenerate(&self) -> bool {
        self.degenerate + self.failed == self.reps
    }
}

pub fn run_coverage(cfg: &ExperimentConfig) -> Result<Vec<CoverageRow>> {
    let problem = cfg.problem()?;
    let specs = cfg.estimator_specs()?;
    let mut rows = Vec::new();
    for (ai, &alpha) in cfg.alphas.iter().enumerate() {
        let schedule = cfg.schedule(alpha)?;
        for (ni, &n) in cfg.ns.iter().enumerate() {
            let reps = cfg.reps_for(n);
            // all estimators at a grid point see the same trajectories
            let seed = replication_seed(cfg.seed, (ai * cfg.ns.len() + ni) as u64, u64::MAX);
            for spec in &specs {
                let reports = with_pool(cfg.workers, || {
                    coverage_experiment(&problem, &schedule, spec, n, reps, &[cfg.level], seed)
                })??;
                let r = &reports[0];
                rows.push(CoverageRow {
                    alpha,
                    n,
                    estimator: spec.label().to_string(),
                    level: r.level,
                    reps: r.reps,
                    covered: r.covered,
                    degenerate: r.degenerate,
                    failed: r.failed,
                    coverage: r.coverage,
                    std_error: r.std_error,
                    coverage_clean: r.coverage_clean,
                });
            }
        }
    }
    Ok(rows)
}

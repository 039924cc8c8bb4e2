//! Leave-one-block-out selection of the burn-in fraction, replicated.

use rayon::prelude::*;
use serde::Serialize;

use crate::batch_means::{cross_validation_scores, BlockSchedule, BmState};
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::output::{fmt_bool, fmt_f64, fmt_opt, CsvRecord};
use crate::harness::{replication_seed, with_pool};
use crate::linalg::Vector;
use crate::rng::RngStream;
use crate::sgd::run_trajectory;

pub const CV_HEADER: &str = "alpha,n,rep,seed,candidate,window,loss,selected";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvRow {
    pub alpha: f64,
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub candidate: f64,
    pub window: usize,
    pub loss: Option<f64>,
    pub selected: bool,
}

impl CsvRecord for CvRow {
    fn header(&self) -> String {
        CV_HEADER.to_string()
    }

    fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.alpha),
            self.n.to_string(),
            self.rep.to_string(),
            self.seed.to_string(),
            fmt_f64(self.candidate),
            self.window.to_string(),
            fmt_opt(self.loss),
            fmt_bool(self.selected),
        ]
    }
}

pub fn run_cv_rho(cfg: &ExperimentConfig) -> Result<Vec<CvRow>> {
    let problem = cfg.problem()?;
    let alpha = cfg.alphas[0];
    let n = cfg.ns[0];
    let schedule = cfg.schedule(alpha)?;
    let blocks = BlockSchedule::new(cfg.c, cfg.beta_choice(cfg.beta_rule()?).resolve(alpha))?;
    let per_rep: Vec<Result<Vec<CvRow>>> = with_pool(cfg.workers, || {
        (0..cfg.reps)
            .into_par_iter()
            .map(|rep| {
                let seed = replication_seed(cfg.seed, 0, rep as u64);
                let mut rng = RngStream::new(seed, 0);
                let x0 = Vector::zeros(cfg.d);
                let mut bm = BmState::new(cfg.d, blocks, 1.0)?;
                run_trajectory(&problem, &schedule, &x0, n, &mut rng, &mut [&mut bm])?;
                let scores = cross_validation_scores(&bm, &cfg.rho_candidates)?;
                let chosen = crate::batch_means::cross_validate_rho(&bm, &cfg.rho_candidates)?;
                Ok(scores
                    .into_iter()
                    .map(|s| CvRow {
                        alpha,
                        n,
                        rep,
                        seed,
                        candidate: s.rho,
                        window: s.window,
                        loss: s.loss,
                        selected: s.rho == chosen,
                    })
                    .collect())
            })
            .collect()
    })?;
    let mut rows = Vec::new();
    for r in per_rep {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Selected fraction of each replication, in replication order.
pub fn selections(rows: &[CvRow]) -> Vec<f64> {
    rows.iter().filter(|r| r.selected).map(|r| r.candidate).collect()
}

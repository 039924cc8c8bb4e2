//! Two-point bounds over an `(α, n)` grid, optionally next to the measured
//! risk of trajectory regression on both hypotheses.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::output::{fmt_bool, fmt_f64, fmt_opt, CsvRecord};
use crate::harness::{replication_seed, with_pool};
use crate::linalg::{operator_norm, SquareMatrix, Vector};
use crate::minimax::{TwoPointConfig, TwoPointReport};
use crate::regression::{RegOptions, RegSink};
use crate::rng::RngStream;
use crate::sgd::{run_trajectory, QuadraticProblem, Schedule};

pub const MINIMAX_HEADER: &str = "alpha,n,d,kappa_hat,delta_n,separation_exact,separation_lower,\
separation_lower_valid,kl_exact,kl_mc,kl_mc_se,mc_within_4se,tv_bound,risk_floor,risk_floor_exact,\
reg_risk_h0,reg_risk_h1";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinimaxRow {
    #[serde(flatten)]
    pub report: TwoPointReport,
    pub mc_within_4se: Option<bool>,
    /// Mean `‖V̂ − V_j‖_op` of trajectory regression under each hypothesis.
    pub reg_risk_h0: Option<f64>,
    pub reg_risk_h1: Option<f64>,
}

impl MinimaxRow {
    pub fn reg_risk_max(&self) -> Option<f64> {
        Some(self.reg_risk_h0?.max(self.reg_risk_h1?))
    }
}

impl CsvRecord for MinimaxRow {
    fn header(&self) -> String {
        MINIMAX_HEADER.to_string()
    }

    fn fields(&self) -> Vec<String> {
        let r = &self.report;
        vec![
            fmt_f64(r.alpha),
            r.n.to_string(),
            r.d.to_string(),
            fmt_f64(r.kappa_hat),
            fmt_f64(r.delta_n),
            fmt_f64(r.separation_exact),
            fmt_f64(r.separation_lower),
            fmt_bool(r.separation_lower_valid),
            fmt_f64(r.kl_exact),
            fmt_opt(r.kl_mc.map(|m| m.mean)),
            fmt_opt(r.kl_mc.map(|m| m.std_error)),
            self.mc_within_4se.map(fmt_bool).unwrap_or_default(),
            fmt_f64(r.tv_bound),
            fmt_f64(r.risk_floor),
            fmt_f64(r.risk_floor_exact),
            fmt_opt(self.reg_risk_h0),
            fmt_opt(self.reg_risk_h1),
        ]
    }
}

/// Mean operator-norm error of trajectory regression on `H = hessian`,
/// `S = I`, over `reps` runs from the origin.
pub fn regression_risk(
    hessian: &SquareMatrix,
    schedule: &Schedule,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<f64> {
    let d = hessian.dim();
    let problem = QuadraticProblem::new(hessian.clone(), SquareMatrix::identity(d), Vector::zeros(d))?;
    let truth = problem.true_covariance()?;
    let errors: Vec<Result<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(replication_seed(seed, 0, r as u64), 0);
            let x0 = Vector::zeros(d);
            let mut sink = RegSink::with_initial(&x0);
            run_trajectory(&problem, schedule, &x0, n, &mut rng, &mut [&mut sink])?;
            let est = sink.state().finalize(&RegOptions::default())?;
            Ok(operator_norm(&est.covariance.sub(&truth)))
        })
        .collect();
    let errors: Vec<f64> = errors.into_iter().collect::<Result<_>>()?;
    Ok(errors.iter().sum::<f64>() / reps as f64)
}

pub fn run_minimax(cfg: &ExperimentConfig) -> Result<Vec<MinimaxRow>> {
    with_pool(cfg.workers, || {
        let mut rows = Vec::new();
        for (ai, &alpha) in cfg.alphas.iter().enumerate() {
            let schedule = cfg.schedule(alpha)?;
            for (ni, &n) in cfg.ns.iter().enumerate() {
                let point = (ai * cfg.ns.len() + ni) as u64;
                let template = TwoPointConfig::new(cfg.d, 0.5, schedule, n)?;
                let mc = (cfg.mc_reps >= 2 && n <= cfg.mc_max_n)
                    .then(|| (cfg.mc_reps, replication_seed(cfg.seed, point, 0)));
                let report = TwoPointReport::evaluate(&template, mc)?;
                let mc_within_4se = report
                    .kl_mc
                    .map(|m| (m.mean - report.kl_exact).abs() <= 4.0 * m.std_error);
                let (mut h0_risk, mut h1_risk) = (None, None);
                if cfg.risk_reps > 0 {
                    let hyp = template.clone().with_delta(report.delta_n)?;
                    let (h0, h1) = hyp.hessians();
                    let seed = replication_seed(cfg.seed, point, 1);
                    h0_risk = Some(regression_risk(&h0, &schedule, n, cfg.risk_reps, seed)?);
                    h1_risk = Some(regression_risk(&h1, &schedule, n, cfg.risk_reps, seed)?);
                }
                rows.push(MinimaxRow {
                    report,
                    mc_within_4se,
                    reg_risk_h0: h0_risk,
                    reg_risk_h1: h1_risk,
                });
            }
        }
        Ok(rows)
    })?
}

//! Per-block bias and variance of `Y_m Y_mᵀ` as an estimate of `V`.

use rayon::prelude::*;
use serde::Serialize;

use crate::batch_means::{BlockSchedule, BmState};
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::output::{fmt_f64, CsvRecord};
use crate::harness::{replication_seed, with_pool};
use crate::linalg::{operator_norm, SquareMatrix, Vector};
use crate::rng::RngStream;
use crate::sgd::{run_trajectory, QuadraticProblem, Schedule};

pub const BLOCK_HEADER: &str = "m,a_m,bias,variance";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockRow {
    pub m: usize,
    pub a_m: usize,
    pub bias: f64,
    pub variance: f64,
}

impl CsvRecord for BlockRow {
    fn header(&self) -> String {
        BLOCK_HEADER.to_string()
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.m.to_string(),
            self.a_m.to_string(),
            fmt_f64(self.bias),
            fmt_f64(self.variance),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasVarianceResult {
    pub alpha: f64,
    pub n: usize,
    pub beta: f64,
    pub reps: usize,
    pub num_blocks: usize,
    pub rows: Vec<BlockRow>,
    /// Smallest `m` with `bias ≤ variance` for every later block.
    pub crossover: Option<usize>,
}

impl BiasVarianceResult {
    pub fn crossover_fraction(&self) -> Option<f64> {
        self.crossover.map(|m| m as f64 / self.num_blocks as f64)
    }
}

/// Block outer products `Y_m Y_mᵀ` of one trajectory, centered at its
/// global mean.
pub fn block_outers(
    problem: &QuadraticProblem,
    schedule: &Schedule,
    blocks: BlockSchedule,
    n: usize,
    rng: &mut RngStream,
) -> Result<Vec<SquareMatrix>> {
    let d = problem.dim();
    let mut bm = BmState::new(d, blocks, 1.0)?;
    run_trajectory(problem, schedule, &Vector::zeros(d), n, rng, &mut [&mut bm])?;
    Ok(bm.centered_blocks()?.iter().map(|b| b.outer()).collect())
}

/// Bias `‖E[YYᵀ] − V‖` and spread `E‖YYᵀ − E[YYᵀ]‖` per block index.
pub fn decompose(outers: &[Vec<SquareMatrix>], truth: &SquareMatrix, blocks: BlockSchedule) -> Vec<BlockRow> {
    let reps = outers.len() as f64;
    let b = outers.first().map_or(0, Vec::len);
    (0..b)
        .map(|m| {
            let mut mean = SquareMatrix::zeros(truth.dim());
            for rep in outers {
                mean.add_scaled(1.0 / reps, &rep[m]);
            }
            let variance = outers
                .iter()
                .map(|rep| operator_norm(&rep[m].sub(&mean).symmetrized()))
                .sum::<f64>()
                / reps;
            BlockRow {
                m: m + 1,
                a_m: blocks.block_size(m + 1),
                bias: operator_norm(&mean.sub(truth).symmetrized()),
                variance,
            }
        })
        .collect()
}

pub fn crossover(rows: &[BlockRow]) -> Option<usize> {
    let mut m_star = None;
    for r in rows.iter().rev() {
        if r.bias <= r.variance {
            m_star = Some(r.m);
        } else {
            break;
        }
    }
    m_star
}

pub fn run_bias_variance(cfg: &ExperimentConfig) -> Result<BiasVarianceResult> {
    let alpha = cfg.alphas[0];
    let n = cfg.ns[0];
    let problem = cfg.problem()?;
    let truth = problem.true_covariance()?;
    let schedule = cfg.schedule(alpha)?;
    let beta = cfg.beta_choice(cfg.beta_rule()?).resolve(alpha);
    let blocks = BlockSchedule::new(cfg.c, beta)?;
    if blocks.num_complete_blocks(n) == 0 {
        return Err(Error::config(format!("n = {n} does not complete a single block")));
    }
    let outers: Vec<Result<Vec<SquareMatrix>>> = with_pool(cfg.workers, || {
        (0..cfg.reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = RngStream::new(replication_seed(cfg.seed, 0, rep as u64), 0);
                block_outers(&problem, &schedule, blocks, n, &mut rng)
            })
            .collect()
    })?;
    let outers: Vec<Vec<SquareMatrix>> = outers.into_iter().collect::<Result<_>>()?;
    let rows = decompose(&outers, &truth, blocks);
    Ok(BiasVarianceResult {
        alpha,
        n,
        beta,
        reps: cfg.reps,
        num_blocks: rows.len(),
        crossover: crossover(&rows),
        rows,
    })
}

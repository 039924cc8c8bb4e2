//! Sample covariance of i.i.d. Gaussian draws, the reference `√(d/n)` rate.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::harness::config::{parse_matrix_spec, ExperimentConfig};
use crate::harness::output::{fmt_f64, CsvRecord};
use crate::harness::{replication_seed, with_pool};
use crate::linalg::{operator_norm, psd_sqrt, SquareMatrix};
use crate::rng::RngStream;

pub const IID_HEADER: &str = "experiment,d,n,rep,seed,op_error,reference";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IidRow {
    pub experiment: String,
    pub d: usize,
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub op_error: f64,
    /// `√(d/n)`.
    pub reference: f64,
}

impl CsvRecord for IidRow {
    fn header(&self) -> String {
        IID_HEADER.to_string()
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.d.to_string(),
            self.n.to_string(),
            self.rep.to_string(),
            self.seed.to_string(),
            fmt_f64(self.op_error),
            fmt_f64(self.reference),
        ]
    }
}

/// `(1/n) Σ X_i X_iᵀ` for `X_i = L z_i`, `z_i ~ N(0, I)`.
pub fn sample_covariance(factor: &SquareMatrix, n: usize, rng: &mut RngStream) -> SquareMatrix {
    let d = factor.dim();
    let mut z = vec![0.0; d];
    let mut x = vec![0.0; d];
    let mut acc = SquareMatrix::zeros(d);
    {
        let a = acc.as_mut_slice();
        for _ in 0..n {
            rng.fill_standard_normal(&mut z);
            factor.mul_slice_into(&z, &mut x);
            for i in 0..d {
                for j in i..d {
                    a[i * d + j] += x[i] * x[j];
                }
            }
        }
    }
    acc.mirror_upper();
    acc.scaled(1.0 / n as f64)
}

pub fn run_iid_baseline(cfg: &ExperimentConfig) -> Result<Vec<IidRow>> {
    let sigma = parse_matrix_spec(&cfg.sigma, cfg.d)?;
    let factor = psd_sqrt(&sigma)?;
    let mut jobs = Vec::new();
    for (ni, &n) in cfg.ns.iter().enumerate() {
        for rep in 0..cfg.reps_for(n) {
            jobs.push((ni, n, rep));
        }
    }
    let rows = with_pool(cfg.workers, || {
        jobs.par_iter()
            .map(|&(ni, n, rep)| {
                let seed = replication_seed(cfg.seed, ni as u64, rep as u64);
                let mut rng = RngStream::new(seed, 0);
                let est = sample_covariance(&factor, n, &mut rng);
                IidRow {
                    experiment: "iid_baseline".to_string(),
                    d: cfg.d,
                    n,
                    rep,
                    seed,
                    op_error: operator_norm(&est.sub(&sigma)),
                    reference: (cfg.d as f64 / n as f64).sqrt(),
                }
            })
            .collect()
    })?;
    Ok(rows)
}

/// `E|χ²_n/n − 1|` in closed form: `4 (n/2)^{n/2} e^{−n/2} / (Γ(n/2) n)`.
pub fn scalar_mean_abs_error(n: usize) -> f64 {
    let k = n as f64 / 2.0;
    let log = 4f64.ln() + k * k.ln() - k - crate::special::ln_gamma(k) - (n as f64).ln();
    log.exp()
}

//! Two-point lower-bound construction.
//!
//! Hypotheses `H₀ = I` and `H₁ = I + δA` with `S = I`, so `V₀ = I` and
//! `V₁ = (I + δA)⁻²`. Under `P₀` the chain is
//! `x_{t+1} = (1 − η_t) x_t − η_t ζ_t` and
//!
//! ```text
//! KL(P₀ⁿ ‖ P₁ⁿ) = (δ²/2) Σ_{t<n} E‖A x_t‖²
//! ```
//!
//! which is evaluated exactly from the mean and per-coordinate variance
//! recursions, or by simulation.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, sym_eigen, SquareMatrix, Vector};
use crate::rng::RngStream;
use crate::sgd::Schedule;

#[derive(Clone, Debug)]
pub struct TwoPointConfig {
    d: usize,
    delta: f64,
    a: SquareMatrix,
    schedule: Schedule,
    n: usize,
    x0: Vector,
}

/// `e₁e₂ᵀ + e₂e₁ᵀ`.
pub fn default_direction(d: usize) -> SquareMatrix {
    let mut a = SquareMatrix::zeros(d);
    a[(0, 1)] = 1.0;
    a[(1, 0)] = 1.0;
    a
}

impl TwoPointConfig {
    pub fn new(d: usize, delta: f64, schedule: Schedule, n: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::domain(format!("two-point construction needs d ≥ 2, got {d}")));
        }
        check_delta(delta)?;
        Ok(TwoPointConfig {
            d,
            delta,
            a: default_direction(d),
            schedule,
            n,
            x0: Vector::zeros(d),
        })
    }

    /// Replaces the perturbation direction; `a` must be symmetric with unit
    /// operator norm.
    pub fn with_direction(mut self, a: SquareMatrix) -> Result<Self> {
        if a.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: a.dim(),
            });
        }
        if !a.is_symmetric() {
            return Err(Error::NotSymmetric {
                asymmetry: a.asymmetry(),
            });
        }
        let norm = operator_norm(&a);
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("direction must have unit operator norm, got {norm}")));
        }
        self.a = a;
        Ok(self)
    }

    pub fn with_initial(mut self, x0: Vector) -> Result<Self> {
        if x0.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: x0.len(),
            });
        }
        self.x0 = x0;
        Ok(self)
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        self.delta = delta;
        Ok(self)
    }

    pub fn with_horizon(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn direction(&self) -> &SquareMatrix {
        &self.a
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    pub fn hessians(&self) -> (SquareMatrix, SquareMatrix) {
        let h0 = SquareMatrix::identity(self.d);
        let mut h1 = h0.clone();
        h1.add_scaled(self.delta, &self.a);
        (h0, h1)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("δ must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Separation {
    /// `‖I − (I + δA)⁻²‖_op`.
    pub exact: f64,
    /// `2δ − 12δ²`.
    pub lower: f64,
    /// The lower bound is only guaranteed for `δ ≤ 1/12`.
    pub lower_valid: bool,
}

pub fn separation(config: &TwoPointConfig) -> Result<Separation> {
    let delta = config.delta;
    let eig = sym_eigen(&config.a)?;
    let exact = eig
        .values
        .iter()
        .map(|&l| (1.0 - (1.0 + delta * l).powi(-2)).abs())
        .fold(0.0, f64::max);
    Ok(Separation {
        exact,
        lower: 2.0 * delta - 12.0 * delta * delta,
        lower_valid: delta <= 1.0 / 12.0,
    })
}

/// `(1/2) Σ_{t<n} E‖A x_t‖²`, the KL divergence per unit `δ²`.
pub fn kl_unit(config: &TwoPointConfig) -> f64 {
    let a_frob_sq = config.a.frobenius_norm().powi(2);
    let mut mean = config.x0.clone();
    let mut var = 0.0;
    let mut total = 0.0;
    for t in 0..config.n {
        total += config.a.mul_vec(&mean).norm_sq() + var * a_frob_sq;
        let eta = config.schedule.stepsize(t);
        let shrink = 1.0 - eta;
        mean = mean.scaled(shrink);
        var = shrink * shrink * var + eta * eta;
    }
    0.5 * total
}

pub fn kl_exact(config: &TwoPointConfig) -> f64 {
    config.delta * config.delta * kl_unit(config)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub reps: usize,
}

/// Simulated KL: replication `r` draws from stream `(seed, r)`.
pub fn kl_monte_carlo(config: &TwoPointConfig, reps: usize, seed: u64) -> Result<McEstimate> {
    if reps < 2 {
        return Err(Error::domain("Monte Carlo KL needs at least 2 replications"));
    }
    let half_delta_sq = 0.5 * config.delta * config.delta;
    let samples: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, r as u64);
            let d = config.d;
            let mut x = config.x0.clone();
            let mut z = vec![0.0; d];
            let mut total = 0.0;
            for t in 0..config.n {
                total += config.a.mul_vec(&x).norm_sq();
                let eta = config.schedule.stepsize(t);
                rng.fill_standard_normal(&mut z);
                for i in 0..d {
                    x[i] = (1.0 - eta) * x[i] - eta * z[i];
                }
            }
            half_delta_sq * total
        })
        .collect();
    let n = reps as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(McEstimate {
        mean,
        std_error: (var / n).sqrt(),
        reps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Calibration {
    /// `κ̂ = KL(δ = 1) / n^{1−α}`.
    pub kappa_hat: f64,
    /// `δ_n = (8κ̂)^{−1/2} n^{−(1−α)/2}`.
    pub delta_n: f64,
}

/// Calibrates `δ` for the horizon of `config`; the configured `δ` is ignored.
pub fn calibrate_delta(config: &TwoPointConfig) -> Result<Calibration> {
    if config.n == 0 {
        return Err(Error::domain("calibration needs n ≥ 1"));
    }
    let exponent = 1.0 - config.schedule.alpha();
    let n = config.n as f64;
    let kappa_hat = kl_unit(config) / n.powf(exponent);
    if !(kappa_hat > 0.0) {
        return Err(Error::domain(
            "KL vanishes over this horizon; δ cannot be calibrated",
        ));
    }
    Ok(Calibration {
        kappa_hat,
        delta_n: (8.0 * kappa_hat).powf(-0.5) * n.powf(-exponent / 2.0),
    })
}

/// Pinsker bound `min(1, √(KL/2))`.
pub fn pinsker_tv(kl: f64) -> f64 {
    (0.5 * kl.max(0.0)).sqrt().min(1.0)
}

/// Le Cam two-point floor `(separation/2)(1 − TV)`.
pub fn lecam_floor(separation: f64, tv: f64) -> f64 {
    0.5 * separation * (1.0 - tv.clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoPointReport {
    pub d: usize,
    pub alpha: f64,
    pub n: usize,
    pub kappa_hat: f64,
    pub delta_n: f64,
    pub separation_exact: f64,
    pub separation_lower: f64,
    pub separation_lower_valid: bool,
    pub kl_exact: f64,
    pub kl_mc: Option<McEstimate>,
    pub tv_bound: f64,
    /// Floor with the guaranteed separation `δ_n`.
    pub risk_floor: f64,
    /// Floor with the exact separation.
    pub risk_floor_exact: f64,
}

impl TwoPointReport {
    /// Calibrates `δ_n` for `template`'s horizon and evaluates every bound
    /// there. `mc` requests a simulated KL as `(reps, seed)`.
    pub fn evaluate(template: &TwoPointConfig, mc: Option<(usize, u64)>) -> Result<Self> {
        let cal = calibrate_delta(template)?;
        let config = template.clone().with_delta(cal.delta_n)?;
        let sep = separation(&config)?;
        let kl = kl_exact(&config);
        let tv = pinsker_tv(kl);
        let kl_mc = match mc {
            Some((reps, seed)) => Some(kl_monte_carlo(&config, reps, seed)?),
            None => None,
        };
        Ok(TwoPointReport {
            d: config.d,
            alpha: config.schedule.alpha(),
            n: config.n,
            kappa_hat: cal.kappa_hat,
            delta_n: cal.delta_n,
            separation_exact: sep.exact,
            separation_lower: sep.lower,
            separation_lower_valid: sep.lower_valid,
            kl_exact: kl,
            kl_mc,
            tv_bound: tv,
            risk_floor: lecam_floor(cal.delta_n, tv),
            risk_floor_exact: lecam_floor(sep.exact, tv),
        })
    }
}

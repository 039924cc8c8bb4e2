//! Online batch means with growing blocks and a burn-in window.
//!
//! Block `m` holds `a_m = max(1, ⌊C m^β⌋)` consecutive iterates. After `n`
//! iterates there are `b_n` complete blocks; the estimator keeps the last
//! `K_n = max(1, ⌊ρ b_n⌋)` of them and averages `Y_m Y_mᵀ` with
//!
//! ```text
//! Y_m = (s_m − a_m x̄_n) / √a_m,      s_m = Σ_{k ∈ block m} x_k.
//! ```
//!
//! Centering uses the global mean at query time. Each retained block keeps
//! its sum vector, so the estimate is exact with `O(K_n d + d²)` memory:
//!
//! ```text
//! Σ̂ = (1/K_n) [ M2 − x̄ uᵀ − u x̄ᵀ + A x̄ x̄ᵀ ],
//! M2 = Σ s_m s_mᵀ / a_m,  u = Σ s_m,  A = Σ a_m   (sums over retained blocks)
//! ```
//!
//! All sums are taken relative to a pivot (the first iterate). `Y_m` is
//! invariant under that shift and the accumulators stay well scaled when
//! the optimum is far from the origin.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, SquareMatrix, Vector};
use crate::sgd::IterateSink;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockSchedule {
    c: f64,
    beta: f64,
}

impl BlockSchedule {
    pub fn new(c: f64, beta: f64) -> Result<Self> {
        if !(c >= 1.0 && c.is_finite()) {
            return Err(Error::domain(format!("block constant C must be ≥ 1, got {c}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::domain(format!("block exponent β must be positive, got {beta}")));
        }
        Ok(BlockSchedule { c, beta })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `a_m = max(1, ⌊C m^β⌋)` for `m ≥ 1`.
    pub fn block_size(&self, m: usize) -> usize {
        debug_assert!(m >= 1);
        let a = (self.c * (m as f64).powf(self.beta)).floor();
        if a < 1.0 {
            1
        } else {
            a as usize
        }
    }

    /// `t_m = a_1 + … + a_m`.
    pub fn endpoint(&self, m: usize) -> usize {
        (1..=m).map(|j| self.block_size(j)).sum()
    }

    /// `b_n = max{m : t_m ≤ n}`, or 0 when the first block is incomplete.
    pub fn num_complete_blocks(&self, n: usize) -> usize {
        let mut m = 0;
        let mut t = 0;
        loop {
            let next = t + self.block_size(m + 1);
            if next > n {
                return m;
            }
            t = next;
            m += 1;
        }
    }
}

/// Window length `K_n = max(1, ⌊ρ b_n⌋)` (0 when there are no blocks).
pub fn window_len(rho: f64, blocks: usize) -> usize {
    if blocks == 0 {
        return 0;
    }
    // guard against ρ·b landing a hair below an integer
    let k = (rho * blocks as f64 + 1e-9).floor() as usize;
    k.clamp(1, blocks)
}

/// A sealed block. `centered_sum` is `s_m − a_m c` for the state's pivot `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockRecord {
    pub index: usize,
    pub size: usize,
    pub centered_sum: Vector,
}

/// Normalized centered block sum `Y_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct CenteredBlock {
    pub index: usize,
    pub size: usize,
    pub y: Vector,
}

impl CenteredBlock {
    pub fn outer(&self) -> SquareMatrix {
        self.y.outer(&self.y)
    }
}

#[derive(Clone, Debug)]
pub struct BmState {
    dim: usize,
    schedule: BlockSchedule,
    rho: f64,
    pivot: Option<Vector>,
    retained: VecDeque<BlockRecord>,
    m2: SquareMatrix,
    u: Vector,
    a_sum: usize,
    partial_sum: Vector,
    partial_count: usize,
    next_block_size: usize,
    completed: usize,
    n: usize,
    total: Vector,
}

impl BmState {
    pub fn new(dim: usize, schedule: BlockSchedule, rho: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::domain(format!("burn-in fraction ρ must lie in (0, 1], got {rho}")));
        }
        Ok(BmState {
            dim,
            schedule,
            rho,
            pivot: None,
            retained: VecDeque::new(),
            m2: SquareMatrix::zeros(dim),
            u: Vector::zeros(dim),
            a_sum: 0,
            partial_sum: Vector::zeros(dim),
            partial_count: 0,
            next_block_size: schedule.block_size(1),
            completed: 0,
            n: 0,
            total: Vector::zeros(dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn schedule(&self) -> &BlockSchedule {
        &self.schedule
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Iterates consumed.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `b_n`.
    pub fn num_blocks(&self) -> usize {
        self.completed
    }

    /// `K_n`, the number of retained blocks.
    pub fn window_len(&self) -> usize {
        self.retained.len()
    }

    /// `m₀ = b_n − K_n + 1`, or `None` before the first block completes.
    pub fn window_start(&self) -> Option<usize> {
        self.retained.front().map(|r| r.index)
    }

    pub fn retained(&self) -> impl Iterator<Item = &BlockRecord> {
        self.retained.iter()
    }

    pub fn partial_count(&self) -> usize {
        self.partial_count
    }

    pub fn pivot(&self) -> Option<&Vector> {
        self.pivot.as_ref()
    }

    /// Running mean of every iterate consumed, including the partial block.
    pub fn mean(&self) -> Option<Vector> {
        let pivot = self.pivot.as_ref()?;
        Some(pivot.add(&self.total.scaled(1.0 / self.n as f64)))
    }

    /// Raw accumulators `(M2, u, A)` relative to the pivot.
    pub fn accumulators(&self) -> (&SquareMatrix, &Vector, usize) {
        (&self.m2, &self.u, self.a_sum)
    }

    /// Consumes `x_t`; `t` must be the next index.
    pub fn update(&mut self, t: usize, x: &Vector) -> Result<()> {
        if t != self.n + 1 {
            return Err(Error::OutOfOrder {
                expected: self.n + 1,
                got: t,
            });
        }
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let pivot = self.pivot.get_or_insert_with(|| x.clone());
        for i in 0..self.dim {
            let dx = x[i] - pivot[i];
            self.partial_sum[i] += dx;
            self.total[i] += dx;
        }
        self.n += 1;
        self.partial_count += 1;
        if self.partial_count == self.next_block_size {
            self.seal_block();
        }
        Ok(())
    }

    fn seal_block(&mut self) {
        self.completed += 1;
        let size = self.partial_count;
        let sum = std::mem::replace(&mut self.partial_sum, Vector::zeros(self.dim));
        self.m2.add_outer(1.0 / size as f64, &sum, &sum);
        self.u.axpy(1.0, &sum);
        self.a_sum += size;
        self.retained.push_back(BlockRecord {
            index: self.completed,
            size,
            centered_sum: sum,
        });
        self.partial_count = 0;
        self.next_block_size = self.schedule.block_size(self.completed + 1);

        let keep = window_len(self.rho, self.completed);
        while self.retained.len() > keep {
            let old = self.retained.pop_front().expect("non-empty window");
            self.m2.add_outer(-1.0 / old.size as f64, &old.centered_sum, &old.centered_sum);
            self.u.axpy(-1.0, &old.centered_sum);
            self.a_sum -= old.size;
        }
    }

    fn centered_mean(&self) -> Result<Vector> {
        if self.completed == 0 {
            return Err(Error::InsufficientData(
                "no complete block yet".to_string(),
            ));
        }
        Ok(self.total.scaled(1.0 / self.n as f64))
    }

    /// `Σ̂_n(ρ)` from the streaming accumulators.
    pub fn query(&self) -> Result<SquareMatrix> {
        let xbar = self.centered_mean()?;
        let k = self.retained.len() as f64;
        let a = self.a_sum as f64;
        let d = self.dim;
        let mut out = SquareMatrix::zeros(d);
        for i in 0..d {
            for j in i..d {
                let v = self.m2[(i, j)] - xbar[i] * self.u[j] - self.u[i] * xbar[j]
                    + a * xbar[i] * xbar[j];
                out[(i, j)] = v / k;
            }
        }
        out.mirror_upper();
        Ok(out)
    }

    /// `Y_m` for every retained block, centered at the current mean.
    pub fn centered_blocks(&self) -> Result<Vec<CenteredBlock>> {
        let xbar = self.centered_mean()?;
        Ok(self
            .retained
            .iter()
            .map(|r| {
                let a = r.size as f64;
                let mut y = r.centered_sum.clone();
                y.axpy(-a, &xbar);
                CenteredBlock {
                    index: r.index,
                    size: r.size,
                    y: y.scaled(1.0 / a.sqrt()),
                }
            })
            .collect())
    }

    /// Weighted estimate `(1/W) Σ m^p Y_m Y_mᵀ` over all blocks.
    ///
    /// Needs the full block list, so only states with `ρ = 1` qualify.
    pub fn query_weighted(&self, p: f64) -> Result<SquareMatrix> {
        if self.rho != 1.0 {
            return Err(Error::domain(format!(
                "weighted estimator needs every block (ρ = 1), state has ρ = {}",
                self.rho
            )));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::domain(format!("weight exponent p must be positive, got {p}")));
        }
        let blocks = self.centered_blocks()?;
        let mut out = SquareMatrix::zeros(self.dim);
        let mut total_weight = 0.0;
        for b in &blocks {
            let w = (b.index as f64).powf(p);
            out.add_outer(w, &b.y, &b.y);
            total_weight += w;
        }
        let mut out = out.scaled(1.0 / total_weight);
        out = out.symmetrized();
        Ok(out)
    }
}

impl IterateSink for BmState {
    fn observe(&mut self, t: usize, x: &Vector, _eta_prev: f64) -> Result<()> {
        self.update(t, x)
    }
}

/// Block-growth exponent regimes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BetaRule {
    /// `β* = 2/(1−α)`.
    Original,
    /// `β₀ = (1+α)/(1−α)`.
    VarianceLimited,
    /// `β† = (1+2α)/(2(1−α))`, which balances variance and stationarity bias.
    Optimal,
}

pub fn choose_beta(alpha: f64, rule: BetaRule) -> f64 {
    match rule {
        BetaRule::Original => 2.0 / (1.0 - alpha),
        BetaRule::VarianceLimited => (1.0 + alpha) / (1.0 - alpha),
        BetaRule::Optimal => (1.0 + 2.0 * alpha) / (2.0 * (1.0 - alpha)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixingCheck {
    pub ok: bool,
    /// `γ = β(1−α) − α`.
    pub gamma: f64,
}

/// Mixing condition `β > α/(1−α)`, equivalently `γ > 0`.
pub fn mixing_ok(alpha: f64, beta: f64) -> MixingCheck {
    let gamma = beta * (1.0 - alpha) - alpha;
    MixingCheck {
        ok: beta > alpha / (1.0 - alpha),
        gamma,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvScore {
    pub rho: f64,
    pub window: usize,
    /// Mean of `‖Y_m Y_mᵀ − Σ̂_{−m}‖²_op` over the window; `None` when skipped.
    pub loss: Option<f64>,
}

/// Leave-one-block-out losses for each candidate burn-in fraction.
pub fn cross_validation_scores(state: &BmState, candidates: &[f64]) -> Result<Vec<CvScore>> {
    if state.rho() != 1.0 {
        return Err(Error::domain("cross-validation needs a state with ρ = 1"));
    }
    if state.num_blocks() < 3 {
        return Err(Error::InsufficientData(format!(
            "cross-validation needs at least 3 blocks, have {}",
            state.num_blocks()
        )));
    }
    let blocks = state.centered_blocks()?;
    let outers: Vec<SquareMatrix> = blocks.iter().map(CenteredBlock::outer).collect();
    let b = blocks.len();
    let mut scores = Vec::with_capacity(candidates.len());
    for &rho in candidates {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::domain(format!("candidate ρ = {rho} outside (0, 1]")));
        }
        let k = window_len(rho, b);
        if k < 2 {
            scores.push(CvScore {
                rho,
                window: k,
                loss: None,
            });
            continue;
        }
        let window = &outers[b - k..];
        let mut total = SquareMatrix::zeros(state.dim());
        for o in window {
            total.add_scaled(1.0, o);
        }
        let mut loss = 0.0;
        for o in window {
            let held_out = total.sub(o).scaled(1.0 / (k - 1) as f64);
            let diff = o.sub(&held_out).symmetrized();
            loss += operator_norm(&diff).powi(2);
        }
        scores.push(CvScore {
            rho,
            window: k,
            loss: Some(loss / k as f64),
        });
    }
    Ok(scores)
}

/// Candidate with the smallest leave-one-block-out loss; ties go to the
/// larger `ρ`.
pub fn cross_validate_rho(state: &BmState, candidates: &[f64]) -> Result<f64> {
    let mut scores = cross_validation_scores(state, candidates)?;
    scores.sort_by(|a, b| b.rho.total_cmp(&a.rho));
    let mut best: Option<(f64, f64)> = None;
    for s in &scores {
        let Some(loss) = s.loss else { continue };
        match best {
            None => best = Some((s.rho, loss)),
            Some((_, best_loss)) if loss < best_loss - 1e-12 * best_loss.abs().max(1e-300) => {
                best = Some((s.rho, loss))
            }
            _ => {}
        }
    }
    best.map(|(rho, _)| rho).ok_or_else(|| {
        Error::InsufficientData("every candidate window has fewer than 2 blocks".to_string())
    })
}

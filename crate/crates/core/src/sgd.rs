//! SGD with polynomial step sizes and streaming of iterates to estimators.

use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, spd_inverse, sym_eigen, SquareMatrix, Vector};
use crate::rng::RngStream;

/// Step sizes `η_t = η₀ t^{-α}` for `t ≥ 1`, with `η₀` used at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    eta0: f64,
    alpha: f64,
}

impl Schedule {
    pub fn new(eta0: f64, alpha: f64) -> Result<Self> {
        if !(eta0 > 0.0 && eta0.is_finite()) {
            return Err(Error::domain(format!("eta0 must be positive, got {eta0}")));
        }
        if !(alpha > 0.5 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (1/2, 1), got {alpha}")));
        }
        Ok(Schedule { eta0, alpha })
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn stepsize(&self, t: usize) -> f64 {
        if t == 0 {
            self.eta0
        } else {
            self.eta0 * (t as f64).powf(-self.alpha)
        }
    }
}

/// Source of stochastic gradients. Only the quadratic model is provided;
/// the estimators themselves never look past the iterates.
pub trait GradientOracle {
    fn dim(&self) -> usize;

    /// Writes `∇f(x, ζ)` into `out` with fresh noise from `rng`.
    /// `scratch` has length at least `2 · dim`.
    fn stochastic_gradient(
        &self,
        x: &[f64],
        rng: &mut RngStream,
        scratch: &mut [f64],
        out: &mut [f64],
    );

    /// Strong-convexity modulus when known.
    fn strong_convexity(&self) -> Option<f64> {
        None
    }
}

/// `F(x) = ½ (x − x*)ᵀ H (x − x*)` with gradient noise `N(0, S)`.
#[derive(Clone, Debug)]
pub struct QuadraticProblem {
    hessian: SquareMatrix,
    noise_cov: SquareMatrix,
    x_star: Vector,
    noise_factor: SquareMatrix,
    mu: f64,
}

impl QuadraticProblem {
    pub fn new(hessian: SquareMatrix, noise_cov: SquareMatrix, x_star: Vector) -> Result<Self> {
        let d = hessian.dim();
        if d == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if noise_cov.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: noise_cov.dim(),
            });
        }
        if x_star.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: x_star.len(),
            });
        }
        let h_eig = sym_eigen(&hessian)?;
        if !(h_eig.min() > 0.0) {
            return Err(Error::domain(format!(
                "Hessian must be positive definite (λ_min = {:e})",
                h_eig.min()
            )));
        }
        let s_eig = sym_eigen(&noise_cov)?;
        if s_eig.min() < -1e-12 * s_eig.max().abs().max(1.0) {
            return Err(Error::domain(format!(
                "noise covariance must be PSD (λ_min = {:e})",
                s_eig.min()
            )));
        }
        let noise_factor = psd_sqrt(&noise_cov)?;
        Ok(QuadraticProblem {
            hessian: hessian.symmetrized(),
            noise_cov: noise_cov.symmetrized(),
            x_star,
            noise_factor,
            mu: h_eig.min(),
        })
    }

    /// `H = h·I`, `S = s·I`, optimum at the origin.
    pub fn isotropic(d: usize, h: f64, s: f64) -> Result<Self> {
        QuadraticProblem::new(
            SquareMatrix::identity(d).scaled(h),
            SquareMatrix::identity(d).scaled(s),
            Vector::zeros(d),
        )
    }

    /// Diagonal Hessian with eigenvalues equally spaced on `[lo, hi]`,
    /// `S = I`, optimum at the origin.
    pub fn equispaced(d: usize, lo: f64, hi: f64) -> Result<Self> {
        let eig = equispaced(d, lo, hi);
        QuadraticProblem::new(
            SquareMatrix::diag(&eig),
            SquareMatrix::identity(d),
            Vector::zeros(d),
        )
    }

    pub fn with_optimum(mut self, x_star: Vector) -> Result<Self> {
        if x_star.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x_star.len(),
            });
        }
        self.x_star = x_star;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.hessian.dim()
    }

    pub fn hessian(&self) -> &SquareMatrix {
        &self.hessian
    }

    pub fn noise_cov(&self) -> &SquareMatrix {
        &self.noise_cov
    }

    pub fn noise_factor(&self) -> &SquareMatrix {
        &self.noise_factor
    }

    pub fn x_star(&self) -> &Vector {
        &self.x_star
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `V = H⁻¹ S H⁻¹`.
    pub fn true_covariance(&self) -> Result<SquareMatrix> {
        let h_inv = spd_inverse(&self.hessian, 0.0)?.inverse;
        Ok(self.noise_cov.congruence(&h_inv).symmetrized())
    }
}

impl GradientOracle for QuadraticProblem {
    fn dim(&self) -> usize {
        self.hessian.dim()
    }

    #[inline]
    fn stochastic_gradient(
        &self,
        x: &[f64],
        rng: &mut RngStream,
        scratch: &mut [f64],
        out: &mut [f64],
    ) {
        let d = self.dim();
        let (diff, zeta) = scratch.split_at_mut(d);
        for ((dst, xi), si) in diff.iter_mut().zip(x).zip(self.x_star.iter()) {
            *dst = xi - si;
        }
        self.hessian.mul_slice_into(diff, out);
        rng.fill_standard_normal(&mut zeta[..d]);
        let l = self.noise_factor.as_slice();
        for (i, o) in out.iter_mut().enumerate().take(d) {
            let row = &l[i * d..(i + 1) * d];
            *o += row.iter().zip(zeta.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    fn strong_convexity(&self) -> Option<f64> {
        Some(self.mu)
    }
}

/// `d` points equally spaced on `[lo, hi]` (a single point sits at `lo`).
pub fn equispaced(d: usize, lo: f64, hi: f64) -> Vec<f64> {
    if d == 1 {
        return vec![lo];
    }
    (0..d)
        .map(|i| lo + (hi - lo) * i as f64 / (d - 1) as f64)
        .collect()
}

/// Iterate `x_t` after `t` steps together with the running sum of
/// `x_1, …, x_t` (the initial point is not averaged).
#[derive(Clone, Debug)]
pub struct SgdState {
    t: usize,
    x: Vector,
    sum: Vector,
    grad: Vec<f64>,
    scratch: Vec<f64>,
}

impl PartialEq for SgdState {
    fn eq(&self, other: &Self) -> bool {
        self.t == other.t && self.x == other.x && self.sum == other.sum
    }
}

impl SgdState {
    pub fn new(x0: Vector) -> Self {
        let d = x0.len();
        SgdState {
            t: 0,
            sum: Vector::zeros(d),
            x: x0,
            grad: vec![0.0; d],
            scratch: vec![0.0; 2 * d],
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn x(&self) -> &Vector {
        &self.x
    }

    pub fn sum(&self) -> &Vector {
        &self.sum
    }

    /// Polyak–Ruppert average `x̄_t`; the initial point is returned before
    /// the first step.
    pub fn mean(&self) -> Vector {
        if self.t == 0 {
            return self.x.clone();
        }
        self.sum.scaled(1.0 / self.t as f64)
    }

    /// One step `x_{t+1} = x_t − η_t ∇f(x_t, ζ_t)`; returns the step size used.
    #[inline]
    pub fn step<O: GradientOracle + ?Sized>(
        &mut self,
        oracle: &O,
        schedule: &Schedule,
        rng: &mut RngStream,
    ) -> f64 {
        let eta = schedule.stepsize(self.t);
        oracle.stochastic_gradient(self.x.as_slice(), rng, &mut self.scratch, &mut self.grad);
        let x = self.x.as_mut_slice();
        let sum = self.sum.as_mut_slice();
        for i in 0..x.len() {
            x[i] -= eta * self.grad[i];
            sum[i] += x[i];
        }
        self.t += 1;
        eta
    }
}

/// Consumer of the iterate stream.
///
/// Receives `(t, x_t, η_{t−1})` for `t = 1, 2, …` in order, exactly once each.
pub trait IterateSink {
    fn observe(&mut self, t: usize, x: &Vector, eta_prev: f64) -> Result<()>;
}

impl<F> IterateSink for F
where
    F: FnMut(usize, &Vector, f64) -> Result<()>,
{
    fn observe(&mut self, t: usize, x: &Vector, eta_prev: f64) -> Result<()> {
        self(t, x, eta_prev)
    }
}

/// Resumable single-pass driver. Sinks may differ between calls to
/// [`Trajectory::advance_to`], which lets callers query estimators at
/// checkpoints of one long run.
pub struct Trajectory<'a, O: GradientOracle + ?Sized> {
    oracle: &'a O,
    schedule: Schedule,
    rng: &'a mut RngStream,
    state: SgdState,
}

impl<'a, O: GradientOracle + ?Sized> Trajectory<'a, O> {
    pub fn new(oracle: &'a O, schedule: &Schedule, x0: &Vector, rng: &'a mut RngStream) -> Self {
        assert_eq!(x0.len(), oracle.dim(), "initial point dimension");
        if let Some(mu) = oracle.strong_convexity() {
            if schedule.eta0() <= 1.0 / (2.0 * mu) {
                log::warn!(
                    "eta0 = {} is below 1/(2μ) = {}; averaging may not reach the O(1/n) regime",
                    schedule.eta0(),
                    1.0 / (2.0 * mu)
                );
            }
        }
        Trajectory {
            oracle,
            schedule: *schedule,
            rng,
            state: SgdState::new(x0.clone()),
        }
    }

    pub fn state(&self) -> &SgdState {
        &self.state
    }

    pub fn into_state(self) -> SgdState {
        self.state
    }

    /// Steps until `t = n`, delivering every new iterate to each sink.
    pub fn advance_to(&mut self, n: usize, sinks: &mut [&mut dyn IterateSink]) -> Result<&SgdState> {
        while self.state.t < n {
            let eta = self.state.step(self.oracle, &self.schedule, self.rng);
            for sink in sinks.iter_mut() {
                sink.observe(self.state.t, &self.state.x, eta)?;
            }
        }
        Ok(&self.state)
    }
}

/// Runs `n` SGD steps from `x0`, streaming each iterate to every sink.
pub fn run_trajectory<O: GradientOracle + ?Sized>(
    oracle: &O,
    schedule: &Schedule,
    x0: &Vector,
    n: usize,
    rng: &mut RngStream,
    sinks: &mut [&mut dyn IterateSink],
) -> Result<SgdState> {
    if n == 0 {
        return Err(Error::domain("trajectory length must be at least 1"));
    }
    let mut traj = Trajectory::new(oracle, schedule, x0, rng);
    traj.advance_to(n, sinks)?;
    Ok(traj.into_state())
}

//! Trajectory regression: `Ĥ` from regressing rescaled increments on
//! iterates, `Ŝ` from the residuals, and the plug-in `V̂ = Ĥ⁻¹ Ŝ Ĥ⁻ᵀ`.
//!
//! Each pair `(x_t, x_{t+1}, η_t)` contributes `y_t = (x_t − x_{t+1}) / η_t`
//! to five running sums; nothing else is stored.

use crate::error::{Error, Result};
use crate::linalg::{
    general_inverse, spd_inverse, sym_eigen, sym_inverse, SquareMatrix, Vector,
};
use crate::sgd::IterateSink;

#[derive(Clone, Debug, PartialEq)]
pub struct RegState {
    dim: usize,
    n_pairs: usize,
    // sxx and syy are maintained on the upper triangle only
    sxx: SquareMatrix,
    syx: SquareMatrix,
    syy: SquareMatrix,
    sum_x: Vector,
    sum_y: Vector,
    y: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegOptions {
    /// Replace `Ĥ` by `(Ĥ + Ĥᵀ)/2` before inverting it.
    pub symmetrize: bool,
    /// Eigenvalue floor for the centered Gram; `None` uses `1e-10 · tr(G)/d`.
    pub eig_floor: Option<f64>,
    /// Residuals `(y_t − ȳ) − Ĥ(x_t − x̄)` instead of `y_t − Ĥ x_t`.
    /// The uncentered form assumes the optimum sits at the origin.
    pub center_residuals: bool,
}

impl Default for RegOptions {
    fn default() -> Self {
        RegOptions {
            symmetrize: true,
            eig_floor: None,
            center_residuals: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RegEstimate {
    pub hessian: SquareMatrix,
    pub noise: SquareMatrix,
    pub covariance: SquareMatrix,
    /// One Gram eigenvalue was lifted to the floor.
    pub gram_floored: bool,
}

impl RegState {
    pub fn new(dim: usize) -> Self {
        RegState {
            dim,
            n_pairs: 0,
            sxx: SquareMatrix::zeros(dim),
            syx: SquareMatrix::zeros(dim),
            syy: SquareMatrix::zeros(dim),
            sum_x: Vector::zeros(dim),
            sum_y: Vector::zeros(dim),
            y: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn sxx(&self) -> SquareMatrix {
        let mut m = self.sxx.clone();
        m.mirror_upper();
        m
    }

    pub fn syx(&self) -> &SquareMatrix {
        &self.syx
    }

    pub fn syy(&self) -> SquareMatrix {
        let mut m = self.syy.clone();
        m.mirror_upper();
        m
    }

    pub fn sum_x(&self) -> &Vector {
        &self.sum_x
    }

    pub fn sum_y(&self) -> &Vector {
        &self.sum_y
    }

    /// Adds the pair `(x_t, x_{t+1})` taken with step size `η_t`.
    pub fn update(&mut self, x: &[f64], x_next: &[f64], eta: f64) -> Result<()> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::domain(format!("step size must be positive, got {eta}")));
        }
        let d = self.dim;
        if x.len() != d || x_next.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: if x.len() != d { x.len() } else { x_next.len() },
            });
        }
        let inv = 1.0 / eta;
        for i in 0..d {
            self.y[i] = (x[i] - x_next[i]) * inv;
        }
        let y = &self.y;
        let sxx = self.sxx.as_mut_slice();
        let syx = self.syx.as_mut_slice();
        let syy = self.syy.as_mut_slice();
        for i in 0..d {
            let (xi, yi) = (x[i], y[i]);
            let row = i * d;
            for j in i..d {
                sxx[row + j] += xi * x[j];
                syy[row + j] += yi * y[j];
            }
            for j in 0..d {
                syx[row + j] += yi * x[j];
            }
            self.sum_x[i] += xi;
            self.sum_y[i] += yi;
        }
        self.n_pairs += 1;
        Ok(())
    }

    /// Combines statistics of two disjoint stream segments.
    pub fn merge(&mut self, other: &RegState) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        self.n_pairs += other.n_pairs;
        self.sxx.add_scaled(1.0, &other.sxx);
        self.syx.add_scaled(1.0, &other.syx);
        self.syy.add_scaled(1.0, &other.syy);
        self.sum_x.axpy(1.0, &other.sum_x);
        self.sum_y.axpy(1.0, &other.sum_y);
        Ok(())
    }

    /// Centered Gram `G = Sxx − n x̄ x̄ᵀ` and cross moment `C = Syx − n ȳ x̄ᵀ`.
    pub fn centered_moments(&self) -> (SquareMatrix, SquareMatrix) {
        let n = self.n_pairs as f64;
        let xbar = self.sum_x.scaled(1.0 / n.max(1.0));
        let ybar = self.sum_y.scaled(1.0 / n.max(1.0));
        let mut g = self.sxx();
        g.add_outer(-n, &xbar, &xbar);
        let g = g.symmetrized();
        let mut c = self.syx.clone();
        c.add_outer(-n, &ybar, &xbar);
        (g, c)
    }

    /// Least-squares slope `Ĥ = C G⁻¹` and whether one Gram eigenvalue was
    /// floored.
    pub fn hessian_ls(&self, eig_floor: Option<f64>) -> Result<(SquareMatrix, bool)> {
        let d = self.dim;
        if self.n_pairs < d + 1 {
            return Err(Error::RankDeficient(format!(
                "{} pairs for dimension {d}, need at least {}",
                self.n_pairs,
                d + 1
            )));
        }
        let (g, c) = self.centered_moments();
        let trace = g.trace();
        if !(trace > 0.0 && trace.is_finite()) {
            return Err(Error::RankDeficient(format!("Gram trace {trace:e}")));
        }
        let floor = eig_floor.unwrap_or(1e-10 * trace / d as f64);
        let eig = sym_eigen(&g)?;
        let floored = eig.values.iter().filter(|&&l| l < floor).count();
        if floored > 1 {
            return Err(Error::RankDeficient(format!(
                "{floored} Gram eigenvalues below floor {floor:e}"
            )));
        }
        let g_inv = spd_inverse(&g, floor)
            .map_err(|e| Error::RankDeficient(e.to_string()))?
            .inverse;
        Ok((c.matmul(&g_inv), floored == 1))
    }

    pub fn finalize(&self, opts: &RegOptions) -> Result<RegEstimate> {
        let (h_ls, gram_floored) = self.hessian_ls(opts.eig_floor)?;
        let noise = self.residual_covariance(&h_ls, opts.center_residuals);
        let hessian = if opts.symmetrize {
            h_ls.symmetrized()
        } else {
            h_ls
        };
        let h_inv = if opts.symmetrize {
            sym_inverse(&hessian)?
        } else {
            general_inverse(&hessian)?
        };
        let covariance = noise.congruence(&h_inv);
        let covariance = if opts.symmetrize {
            covariance.symmetrized()
        } else {
            covariance
        };
        Ok(RegEstimate {
            hessian,
            noise,
            covariance,
            gram_floored,
        })
    }

    /// `(1/n) Σ ζ̂_t ζ̂_tᵀ` for residuals of the slope `h`, via the moment
    /// identity.
    pub fn residual_covariance(&self, h: &SquareMatrix, centered: bool) -> SquareMatrix {
        let n = self.n_pairs as f64;
        let (sxx, syx, syy) = if centered {
            let (g, c) = self.centered_moments();
            let ybar = self.sum_y.scaled(1.0 / n);
            let mut cyy = self.syy();
            cyy.add_outer(-n, &ybar, &ybar);
            (g, c, cyy)
        } else {
            (self.sxx(), self.syx.clone(), self.syy())
        };
        let h_syx_t = h.matmul(&syx.transpose());
        let mut s = syy.sub(&h_syx_t).sub(&h_syx_t.transpose());
        s.add_scaled(1.0, &sxx.congruence(h));
        s.scaled(1.0 / n).symmetrized()
    }
}

/// Adapts [`RegState`] to an iterate stream by pairing consecutive
/// deliveries.
#[derive(Clone, Debug)]
pub struct RegSink {
    state: RegState,
    prev: Option<Vector>,
}

impl RegSink {
    pub fn new(dim: usize) -> Self {
        RegSink {
            state: RegState::new(dim),
            prev: None,
        }
    }

    /// Starts from a known `x_0` so the first delivered iterate already
    /// completes a pair.
    pub fn with_initial(x0: &Vector) -> Self {
        RegSink {
            state: RegState::new(x0.len()),
            prev: Some(x0.clone()),
        }
    }

    pub fn state(&self) -> &RegState {
        &self.state
    }

    pub fn into_state(self) -> RegState {
        self.state
    }
}

impl IterateSink for RegSink {
    fn observe(&mut self, _t: usize, x: &Vector, eta_prev: f64) -> Result<()> {
        match &mut self.prev {
            Some(prev) => {
                self.state.update(prev.as_slice(), x.as_slice(), eta_prev)?;
                prev.as_mut_slice().copy_from_slice(x.as_slice());
            }
            None => self.prev = Some(x.clone()),
        }
        Ok(())
    }
}

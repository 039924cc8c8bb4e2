//! Confidence ellipsoids `{x : n (x̄ − x)ᵀ Σ̂⁻¹ (x̄ − x) ≤ χ²_{d, level}}` and
//! coverage experiments.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{EstimatorBank, EstimatorSpec};
use crate::linalg::{default_eig_floor, spd_inverse, SquareMatrix, Vector};
use crate::rng::RngStream;
use crate::sgd::{run_trajectory, QuadraticProblem, Schedule};
use crate::special::chi2_quantile;

#[derive(Clone, Debug)]
pub struct Ellipsoid {
    pub center: Vector,
    pub shape: SquareMatrix,
    pub n: usize,
    pub level: f64,
    pub radius_sq: f64,
    precision: SquareMatrix,
    floored: bool,
}

pub fn build_ellipsoid(center: &Vector, shape: &SquareMatrix, n: usize, level: f64) -> Result<Ellipsoid> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("confidence level {level} outside (0, 1)")));
    }
    if n == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    if center.len() != shape.dim() {
        return Err(Error::DimensionMismatch {
            expected: shape.dim(),
            found: center.len(),
        });
    }
    if !shape.is_symmetric() {
        return Err(Error::NotSymmetric {
            asymmetry: shape.asymmetry(),
        });
    }
    let d = shape.dim();
    let radius_sq = chi2_quantile(d as u32, level)?;
    let inv = spd_inverse(shape, default_eig_floor(shape))?;
    Ok(Ellipsoid {
        center: center.clone(),
        shape: shape.clone(),
        n,
        level,
        radius_sq,
        floored: inv.was_floored(),
        precision: inv.inverse,
    })
}

impl Ellipsoid {
    /// `n (center − x)ᵀ Σ̂⁻¹ (center − x)`.
    pub fn statistic(&self, point: &Vector) -> f64 {
        let diff = self.center.sub(point);
        self.n as f64 * self.precision.quadratic_form(&diff)
    }

    /// Closed ellipsoid membership.
    pub fn covers(&self, point: &Vector) -> bool {
        self.statistic(point) <= self.radius_sq
    }

    /// The shape needed an eigenvalue floor to be inverted.
    pub fn is_degenerate(&self) -> bool {
        self.floored
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageReport {
    pub level: f64,
    pub reps: usize,
    pub covered: usize,
    /// Replications whose ellipsoid needed an eigenvalue floor.
    pub degenerate: usize,
    pub covered_degenerate: usize,
    /// Replications where no estimate was available; counted as misses.
    pub failed: usize,
    pub coverage: f64,
    pub std_error: f64,
    /// Coverage over replications that are neither degenerate nor failed.
    pub coverage_clean: f64,
}

#[derive(Clone, Debug)]
struct RepOutcome {
    // per level: Some((covered, degenerate)) or None on failure
    hits: Vec<Option<(bool, bool)>>,
}

/// Runs `reps` trajectories of length `n` from the origin, builds one
/// ellipsoid per level from the estimator `spec` and checks whether it
/// contains the optimum. Replication `r` uses stream `(seed, r)`.
pub fn coverage_experiment(
    problem: &QuadraticProblem,
    schedule: &Schedule,
    spec: &EstimatorSpec,
    n: usize,
    reps: usize,
    levels: &[f64],
    seed: u64,
) -> Result<Vec<CoverageReport>> {
    if reps == 0 {
        return Err(Error::domain("coverage needs at least one replication"));
    }
    for &level in levels {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::domain(format!("confidence level {level} outside (0, 1)")));
        }
    }
    let truth = problem.true_covariance()?;
    let x0 = Vector::zeros(problem.dim());
    let outcomes: Vec<Result<RepOutcome>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut bank = EstimatorBank::new(std::slice::from_ref(spec), schedule.alpha(), &x0)?;
            let mut rng = RngStream::new(seed, r as u64);
            let state = run_trajectory(problem, schedule, &x0, n, &mut rng, &mut [&mut bank])?;
            let est = bank.estimate(spec, &truth);
            let hits = levels
                .iter()
                .map(|&level| {
                    let m = est.matrix.as_ref()?;
                    let e = build_ellipsoid(&state.mean(), m, n, level).ok()?;
                    Some((e.covers(problem.x_star()), e.is_degenerate() || est.degenerate))
                })
                .collect();
            Ok(RepOutcome { hits })
        })
        .collect();
    let mut reports = Vec::with_capacity(levels.len());
    for (li, &level) in levels.iter().enumerate() {
        let (mut covered, mut degenerate, mut covered_degenerate, mut failed) = (0, 0, 0, 0);
        for o in &outcomes {
            match o.as_ref().map_err(|e| e.to_string()) {
                Ok(RepOutcome { hits }) => match hits[li] {
                    Some((hit, degen)) => {
                        covered += hit as usize;
                        if degen {
                            degenerate += 1;
                            covered_degenerate += hit as usize;
                        }
                    }
                    None => failed += 1,
                },
                Err(msg) => {
                    log::warn!("coverage replication failed: {msg}");
                    failed += 1;
                }
            }
        }
        let p = covered as f64 / reps as f64;
        let clean = reps - degenerate - failed;
        reports.push(CoverageReport {
            level,
            reps,
            covered,
            degenerate,
            covered_degenerate,
            failed,
            coverage: p,
            std_error: (p * (1.0 - p) / reps as f64).sqrt(),
            coverage_clean: if clean > 0 {
                (covered - covered_degenerate) as f64 / clean as f64
            } else {
                f64::NAN
            },
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_for_two_dimensions() {
        let e = build_ellipsoid(&Vector::zeros(2), &SquareMatrix::identity(2), 1, 0.95).unwrap();
        assert!((e.radius_sq - 5.9915).abs() < 1e-4);
        assert!((e.radius_sq - chi2_quantile(2, 0.95).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn radius_grows_with_level() {
        let shape = SquareMatrix::identity(3);
        let radii: Vec<f64> = [0.5, 0.9, 0.99, 0.999, 0.999_999]
            .iter()
            .map(|&l| build_ellipsoid(&Vector::zeros(3), &shape, 1, l).unwrap().radius_sq)
            .collect();
        assert!(radii.windows(2).all(|w| w[1] > w[0]));
        assert!(radii[4] > 30.0);
    }

    #[test]
    fn level_validation() {
        let shape = SquareMatrix::identity(2);
        for level in [0.0, 1.0, -0.1, 1.5] {
            assert!(build_ellipsoid(&Vector::zeros(2), &shape, 10, level).is_err());
        }
    }

    #[test]
    fn unit_ball_membership() {
        // χ²₁ one-sigma level gives radius 1 in one dimension
        let level = 0.682_689_492_137_085_9;
        let e = build_ellipsoid(&Vector::zeros(1), &SquareMatrix::identity(1), 1, level).unwrap();
        assert!((e.radius_sq - 1.0).abs() < 1e-9);
        assert!(e.covers(&Vector::zeros(1)));
        assert!(!e.covers(&Vector::from_slice(&[2.0])));
        assert!(e.covers(&Vector::from_slice(&[0.999_999])));
    }

    #[test]
    fn boundary_is_closed() {
        let mut e = build_ellipsoid(&Vector::zeros(2), &SquareMatrix::identity(2), 1, 0.5).unwrap();
        let p = Vector::from_slice(&[0.6, 0.8]);
        e.radius_sq = e.statistic(&p);
        assert!(e.covers(&p));
    }

    #[test]
    fn floored_shape_is_flagged() {
        let shape = SquareMatrix::diag(&[1.0, 0.0]);
        let e = build_ellipsoid(&Vector::zeros(2), &shape, 5, 0.9).unwrap();
        assert!(e.is_degenerate());
        let ok = build_ellipsoid(&Vector::zeros(2), &SquareMatrix::identity(2), 5, 0.9).unwrap();
        assert!(!ok.is_degenerate());
    }
}

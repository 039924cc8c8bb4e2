//! Online covariance estimation for Polyak–Ruppert averaged SGD.
//!
//! The crate estimates the asymptotic covariance `V = H⁻¹ S H⁻¹` of the
//! averaged iterate from a single SGD trajectory, without Hessian access:
//!
//! - [`batch_means`]: growing-block batch means with a burn-in fraction,
//!   a weighted variant, block-growth selectors and cross-validation of
//!   the burn-in fraction.
//! - [`regression`]: trajectory regression of rescaled increments on
//!   iterates, giving `Ĥ`, `Ŝ` and the plug-in `V̂`.
//! - [`minimax`]: the two-hypothesis construction behind the
//!   `n^{-(1-α)/2}` lower bound, with exact KL divergence and Pinsker and
//!   Le Cam bounds.
//! - [`inference`]: confidence ellipsoids and coverage experiments.
//! - [`harness`]: replicated experiments, slope fitting and CSV/JSON output.
//!
//! Supporting pieces live in [`linalg`], [`special`], [`rng`] and [`sgd`].
//!
//! ```
//! use online_cov::prelude::*;
//!
//! let problem = QuadraticProblem::isotropic(2, 1.0, 1.0).unwrap();
//! let schedule = Schedule::new(1.0, 0.55).unwrap();
//! let mut bm = BmState::new(2, BlockSchedule::new(5.0, 2.3333).unwrap(), 0.5).unwrap();
//! let mut rng = RngStream::new(7, 0);
//! run_trajectory(&problem, &schedule, &Vector::zeros(2), 20_000, &mut rng, &mut [&mut bm]).unwrap();
//! let sigma = bm.query().unwrap();
//! assert_eq!(sigma.dim(), 2);
//! ```

pub mod batch_means;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod inference;
pub mod linalg;
pub mod minimax;
pub mod regression;
pub mod rng;
pub mod sgd;
pub mod special;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::batch_means::{
        choose_beta, cross_validate_rho, mixing_ok, BetaRule, BlockSchedule, BmState,
    };
    pub use crate::error::{Error, Result};
    pub use crate::estimators::{EstimatorKind, EstimatorSpec};
    pub use crate::inference::{build_ellipsoid, coverage_experiment, Ellipsoid};
    pub use crate::linalg::{operator_norm, spd_inverse, sym_eigen, SquareMatrix, Vector};
    pub use crate::minimax::{TwoPointConfig, TwoPointReport};
    pub use crate::regression::{RegOptions, RegSink, RegState};
    pub use crate::rng::RngStream;
    pub use crate::sgd::{run_trajectory, IterateSink, QuadraticProblem, Schedule, SgdState};
    pub use crate::special::chi2_quantile;
}

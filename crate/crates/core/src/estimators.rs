//! Named estimator variants and a bank that feeds all of them from one
//! trajectory.

use std::fmt;
use std::str::FromStr;

use crate::batch_means::{choose_beta, BetaRule, BlockSchedule, BmState};
use crate::error::{Error, Result};
use crate::linalg::{SquareMatrix, Vector};
use crate::regression::{RegOptions, RegSink};
use crate::sgd::IterateSink;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    BmOriginal,
    BmOptimal,
    BmBurnin,
    BmWeighted,
    Regression,
    Oracle,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 6] = [
        EstimatorKind::BmOriginal,
        EstimatorKind::BmOptimal,
        EstimatorKind::BmBurnin,
        EstimatorKind::BmWeighted,
        EstimatorKind::Regression,
        EstimatorKind::Oracle,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::BmOriginal => "bm_original",
            EstimatorKind::BmOptimal => "bm_optimal",
            EstimatorKind::BmBurnin => "bm_burnin",
            EstimatorKind::BmWeighted => "bm_weighted",
            EstimatorKind::Regression => "regression",
            EstimatorKind::Oracle => "oracle",
        }
    }

    pub fn is_batch_means(self) -> bool {
        matches!(
            self,
            EstimatorKind::BmOriginal
                | EstimatorKind::BmOptimal
                | EstimatorKind::BmBurnin
                | EstimatorKind::BmWeighted
        )
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::config(format!("unknown estimator `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BetaChoice {
    Rule(BetaRule),
    Explicit(f64),
}

impl BetaChoice {
    pub fn resolve(self, alpha: f64) -> f64 {
        match self {
            BetaChoice::Rule(rule) => choose_beta(alpha, rule),
            BetaChoice::Explicit(beta) => beta,
        }
    }
}

/// One estimator configuration. Fields that do not apply to the kind are
/// ignored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub rho: f64,
    pub beta: BetaChoice,
    pub c: f64,
    pub p: f64,
    pub reg: RegOptions,
}

pub const DEFAULT_BLOCK_CONSTANT: f64 = 5.0;

impl EstimatorSpec {
    /// Standard settings for each label.
    pub fn standard(kind: EstimatorKind) -> Self {
        let (rho, rule) = match kind {
            EstimatorKind::BmOriginal => (1.0, BetaRule::Original),
            EstimatorKind::BmBurnin => (0.5, BetaRule::Optimal),
            _ => (1.0, BetaRule::Optimal),
        };
        EstimatorSpec {
            kind,
            rho,
            beta: BetaChoice::Rule(rule),
            c: DEFAULT_BLOCK_CONSTANT,
            p: if kind == EstimatorKind::BmWeighted { 1.0 } else { 0.0 },
            reg: RegOptions::default(),
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_beta(mut self, beta: BetaChoice) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn label(&self) -> &'static str {
        self.kind.label()
    }

    /// `(ρ, β, p)` as reported in output rows; NaN where not applicable.
    pub fn reported_params(&self, alpha: f64) -> (f64, f64, f64) {
        if self.kind.is_batch_means() {
            let p = if self.kind == EstimatorKind::BmWeighted {
                self.p
            } else {
                f64::NAN
            };
            (self.rho, self.beta.resolve(alpha), p)
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        }
    }

    fn block_key(&self, alpha: f64) -> Option<BlockKey> {
        self.kind.is_batch_means().then(|| BlockKey {
            c: self.c,
            beta: self.beta.resolve(alpha),
            rho: if self.kind == EstimatorKind::BmWeighted {
                1.0
            } else {
                self.rho
            },
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct BlockKey {
    c: f64,
    beta: f64,
    rho: f64,
}

/// Outcome of one estimator on one trajectory.
#[derive(Clone, Debug)]
pub struct Estimate {
    pub matrix: Option<SquareMatrix>,
    pub degenerate: bool,
    pub error: Option<String>,
}

impl Estimate {
    fn ok(matrix: SquareMatrix, degenerate: bool) -> Self {
        Estimate {
            matrix: Some(matrix),
            degenerate,
            error: None,
        }
    }

    fn failed(err: Error) -> Self {
        Estimate {
            matrix: None,
            degenerate: true,
            error: Some(err.to_string()),
        }
    }
}

/// Sinks for a set of estimators; batch-means variants with equal block
/// schedules and windows share one state.
pub struct EstimatorBank {
    specs: Vec<EstimatorSpec>,
    alpha: f64,
    bm: Vec<(BlockKey, BmState)>,
    reg: Option<RegSink>,
}

impl EstimatorBank {
    pub fn new(specs: &[EstimatorSpec], alpha: f64, x0: &Vector) -> Result<Self> {
        let d = x0.len();
        let mut bm: Vec<(BlockKey, BmState)> = Vec::new();
        let mut reg = None;
        for spec in specs {
            if let Some(key) = spec.block_key(alpha) {
                if spec.kind == EstimatorKind::BmWeighted && !(spec.p > 0.0) {
                    return Err(Error::config(format!("bm_weighted needs p > 0, got {}", spec.p)));
                }
                if !bm.iter().any(|(k, _)| *k == key) {
                    let schedule = BlockSchedule::new(key.c, key.beta)?;
                    bm.push((key, BmState::new(d, schedule, key.rho)?));
                }
            }
            if spec.kind == EstimatorKind::Regression && reg.is_none() {
                reg = Some(RegSink::with_initial(x0));
            }
        }
        Ok(EstimatorBank {
            specs: specs.to_vec(),
            alpha,
            bm,
            reg,
        })
    }

    pub fn specs(&self) -> &[EstimatorSpec] {
        &self.specs
    }

    pub fn bm_state(&self, spec: &EstimatorSpec) -> Option<&BmState> {
        let key = spec.block_key(self.alpha)?;
        self.bm.iter().find(|(k, _)| *k == key).map(|(_, s)| s)
    }

    pub fn reg_sink(&self) -> Option<&RegSink> {
        self.reg.as_ref()
    }

    /// Current estimate of `spec`; `truth` is what the oracle returns.
    pub fn estimate(&self, spec: &EstimatorSpec, truth: &SquareMatrix) -> Estimate {
        let result = match spec.kind {
            EstimatorKind::Oracle => return Estimate::ok(truth.clone(), false),
            EstimatorKind::Regression => match &self.reg {
                Some(sink) => sink
                    .state()
                    .finalize(&spec.reg)
                    .map(|e| (e.covariance, e.gram_floored)),
                None => Err(Error::config("regression sink missing")),
            },
            EstimatorKind::BmWeighted => self
                .bm_state(spec)
                .ok_or_else(|| Error::config("batch-means state missing"))
                .and_then(|s| s.query_weighted(spec.p))
                .map(|m| (m, false)),
            _ => self
                .bm_state(spec)
                .ok_or_else(|| Error::config("batch-means state missing"))
                .and_then(|s| s.query())
                .map(|m| (m, false)),
        };
        match result {
            Ok((m, degenerate)) if m.is_finite() => Estimate::ok(m, degenerate),
            Ok(_) => Estimate::failed(Error::Singular("non-finite estimate".to_string())),
            Err(e) => Estimate::failed(e),
        }
    }
}

impl IterateSink for EstimatorBank {
    fn observe(&mut self, t: usize, x: &Vector, eta_prev: f64) -> Result<()> {
        for (_, state) in &mut self.bm {
            state.update(t, x)?;
        }
        if let Some(reg) = &mut self.reg {
            reg.observe(t, x, eta_prev)?;
        }
        Ok(())
    }
}

//! Flat key-value experiment configuration.
//!
//! Values are layered: per-experiment defaults, then a TOML file, then
//! `--key value` overrides from the command line.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::batch_means::{mixing_ok, BetaRule};
use crate::error::{Error, Result};
use crate::estimators::{BetaChoice, EstimatorKind, EstimatorSpec};
use crate::linalg::{SquareMatrix, Vector};
use crate::sgd::{equispaced, QuadraticProblem, Schedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Rates,
    BiasVariance,
    Coverage,
    Minimax,
    IidBaseline,
    CvRho,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Rates => "rates",
            ExperimentKind::BiasVariance => "bias_variance",
            ExperimentKind::Coverage => "coverage",
            ExperimentKind::Minimax => "minimax",
            ExperimentKind::IidBaseline => "iid_baseline",
            ExperimentKind::CvRho => "cv_rho",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        [
            ExperimentKind::Rates,
            ExperimentKind::BiasVariance,
            ExperimentKind::Coverage,
            ExperimentKind::Minimax,
            ExperimentKind::IidBaseline,
            ExperimentKind::CvRho,
        ]
        .into_iter()
        .find(|k| k.name() == norm)
        .ok_or_else(|| Error::config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

pub const DEFAULT_NS: [usize; 7] = [
    1_000, 3_000, 10_000, 30_000, 100_000, 300_000, 1_000_000,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub d: usize,
    /// `equispaced LO..HI`, `identity`, `scaled C` or a comma list of
    /// eigenvalues.
    pub hessian: String,
    pub noise: String,
    /// Covariance of the i.i.d. baseline, same syntax as `noise`.
    pub sigma: String,
    pub eta0: f64,
    pub alphas: Vec<f64>,
    pub ns: Vec<usize>,
    /// Longer horizons than the default grid.
    pub extended: bool,
    pub reps: usize,
    pub reps_large: usize,
    pub large_n: usize,
    pub estimators: Vec<String>,
    pub c: f64,
    pub burnin_rho: f64,
    pub weighted_p: f64,
    /// Rule for the bias-variance and cross-validation runs.
    pub beta_rule: String,
    /// Explicit β for every batch-means estimator; 0 keeps the rules.
    pub beta: f64,
    pub allow_nonmixing: bool,
    pub level: f64,
    pub rho_candidates: Vec<f64>,
    pub mc_reps: usize,
    pub mc_max_n: usize,
    pub risk_reps: usize,
    pub seed: u64,
    pub workers: usize,
    pub format: OutputFormat,
    pub out: String,
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut cfg = ExperimentConfig {
            experiment: kind.name().to_string(),
            d: 10,
            hessian: "equispaced 1..5".to_string(),
            noise: "identity".to_string(),
            sigma: "identity".to_string(),
            eta0: 1.0,
            alphas: vec![0.55, 0.6, 0.7],
            ns: DEFAULT_NS.to_vec(),
            extended: false,
            reps: 200,
            reps_large: 50,
            large_n: 3_000_000,
            estimators: EstimatorKind::ALL.iter().map(|k| k.label().to_string()).collect(),
            c: 5.0,
            burnin_rho: 0.5,
            weighted_p: 1.0,
            beta_rule: "optimal".to_string(),
            beta: 0.0,
            allow_nonmixing: false,
            level: 0.95,
            rho_candidates: vec![0.25, 0.5, 1.0],
            mc_reps: 0,
            mc_max_n: 10_000,
            risk_reps: 0,
            seed: 20_240_601,
            workers: 0,
            format: OutputFormat::Csv,
            out: String::new(),
            timing: false,
        };
        match kind {
            ExperimentKind::Rates => {}
            ExperimentKind::BiasVariance => {
                cfg.alphas = vec![0.55];
                cfg.ns = vec![100_000];
                cfg.reps = 500;
            }
            ExperimentKind::Coverage => {
                cfg.alphas = vec![0.55];
                cfg.ns = vec![100_000];
                cfg.reps = 500;
                cfg.estimators = vec!["regression".to_string(), "oracle".to_string()];
            }
            ExperimentKind::Minimax => {
                cfg.d = 2;
                cfg.ns = vec![1_000, 10_000, 100_000, 1_000_000];
                cfg.mc_reps = 2_000;
            }
            ExperimentKind::IidBaseline => {
                cfg.ns = vec![1_000, 10_000];
            }
            ExperimentKind::CvRho => {
                cfg.alphas = vec![0.55];
                cfg.ns = vec![100_000];
                cfg.reps = 100;
            }
        }
        cfg
    }

    /// Defaults, then `file`, then `overrides` (key, raw value).
    pub fn load(
        kind: ExperimentKind,
        file: Option<&Path>,
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let mut table = toml::Table::try_from(ExperimentConfig::defaults(kind))
            .map_err(|e| Error::config(e.to_string()))?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
            let file_table: toml::Table = text
                .parse()
                .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
            for (k, v) in file_table {
                if !table.contains_key(&k) {
                    return Err(Error::config(format!("unknown key `{k}` in {}", path.display())));
                }
                table.insert(k, v);
            }
        }
        for (k, raw) in overrides {
            let key = k.replace('-', "_");
            let Some(current) = table.get(&key) else {
                return Err(Error::config(format!("unknown key `{k}`")));
            };
            let value = parse_override(raw, current)?;
            table.insert(key, value);
        }
        let cfg: ExperimentConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        cfg.validate(kind)?;
        Ok(cfg)
    }

    pub fn keys() -> Vec<String> {
        let table = toml::Table::try_from(ExperimentConfig::defaults(ExperimentKind::Rates))
            .expect("defaults serialize");
        table.keys().cloned().collect()
    }

    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if ExperimentKind::parse(&self.experiment)? != kind {
            return Err(Error::config(format!(
                "config is for `{}`, subcommand is `{}`",
                self.experiment,
                kind.name()
            )));
        }
        if self.d == 0 {
            return Err(Error::config("d must be at least 1"));
        }
        if kind == ExperimentKind::Minimax && self.d < 2 {
            return Err(Error::config("minimax needs d ≥ 2"));
        }
        if self.alphas.is_empty() || self.ns.is_empty() {
            return Err(Error::config("alphas and ns must be non-empty"));
        }
        for &a in &self.alphas {
            if !(a > 0.5 && a < 1.0) {
                return Err(Error::config(format!("alpha {a} outside (1/2, 1)")));
            }
        }
        if self.ns.contains(&0) {
            return Err(Error::config("every n must be positive"));
        }
        if !self.extended && self.ns.iter().any(|&n| n > 1_000_000) {
            return Err(Error::config("n above 10^6 needs `extended = true`"));
        }
        if self.reps == 0 {
            return Err(Error::config("reps must be positive"));
        }
        if kind == ExperimentKind::BiasVariance && self.reps < 100 {
            return Err(Error::config("bias-variance needs at least 100 replications"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::config(format!("level {} outside (0, 1)", self.level)));
        }
        if !(self.burnin_rho > 0.0 && self.burnin_rho <= 1.0) {
            return Err(Error::config("burnin_rho must lie in (0, 1]"));
        }
        if self.rho_candidates.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(Error::config("rho_candidates must lie in (0, 1]"));
        }
        if !(self.weighted_p > 0.0) {
            return Err(Error::config("weighted_p must be positive"));
        }
        if !(self.c >= 1.0) {
            return Err(Error::config("c must be at least 1"));
        }
        if !(self.eta0 > 0.0) {
            return Err(Error::config("eta0 must be positive"));
        }
        self.beta_rule()?;
        self.problem()?;
        if kind == ExperimentKind::IidBaseline {
            parse_matrix_spec(&self.sigma, self.d)?;
        }
        let specs = self.estimator_specs()?;
        if !self.allow_nonmixing {
            for &alpha in &self.alphas {
                for spec in specs.iter().filter(|s| s.kind.is_batch_means()) {
                    let beta = spec.beta.resolve(alpha);
                    if !mixing_ok(alpha, beta).ok {
                        return Err(Error::config(format!(
                            "{} with β = {beta} violates the mixing condition at α = {alpha}; \
                             set allow_nonmixing to run it anyway",
                            spec.label()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn beta_rule(&self) -> Result<BetaRule> {
        match self.beta_rule.as_str() {
            "original" => Ok(BetaRule::Original),
            "variance_limited" => Ok(BetaRule::VarianceLimited),
            "optimal" => Ok(BetaRule::Optimal),
            other => Err(Error::config(format!("unknown beta_rule `{other}`"))),
        }
    }

    pub fn beta_choice(&self, rule: BetaRule) -> BetaChoice {
        if self.beta > 0.0 {
            BetaChoice::Explicit(self.beta)
        } else {
            BetaChoice::Rule(rule)
        }
    }

    pub fn estimator_specs(&self) -> Result<Vec<EstimatorSpec>> {
        let mut specs = Vec::new();
        for label in &self.estimators {
            let kind: EstimatorKind = label.parse()?;
            let mut spec = EstimatorSpec::standard(kind).with_c(self.c);
            if let BetaChoice::Rule(rule) = spec.beta {
                spec = spec.with_beta(self.beta_choice(rule));
            }
            match kind {
                EstimatorKind::BmBurnin => spec = spec.with_rho(self.burnin_rho),
                EstimatorKind::BmWeighted => spec = spec.with_p(self.weighted_p),
                _ => {}
            }
            if specs.iter().any(|s: &EstimatorSpec| s.kind == kind) {
                return Err(Error::config(format!("estimator `{label}` listed twice")));
            }
            specs.push(spec);
        }
        if specs.is_empty() {
            return Err(Error::config("no estimators configured"));
        }
        Ok(specs)
    }

    pub fn problem(&self) -> Result<QuadraticProblem> {
        let h = parse_matrix_spec(&self.hessian, self.d)?;
        let s = parse_matrix_spec(&self.noise, self.d)?;
        QuadraticProblem::new(h, s, Vector::zeros(self.d)).map_err(|e| Error::config(e.to_string()))
    }

    pub fn schedule(&self, alpha: f64) -> Result<Schedule> {
        Schedule::new(self.eta0, alpha).map_err(|e| Error::config(e.to_string()))
    }

    /// Replications used at horizon `n`.
    pub fn reps_for(&self, n: usize) -> usize {
        if n >= self.large_n {
            self.reps_large.min(self.reps)
        } else {
            self.reps
        }
    }

    pub fn output_path(&self) -> Option<&Path> {
        (!self.out.is_empty()).then(|| Path::new(self.out.as_str()))
    }
}

/// Diagonal matrix from `equispaced LO..HI`, `identity`, `scaled C` or a
/// comma list of `d` diagonal entries.
pub fn parse_matrix_spec(spec: &str, d: usize) -> Result<SquareMatrix> {
    let spec = spec.trim();
    if spec == "identity" {
        return Ok(SquareMatrix::identity(d));
    }
    if let Some(rest) = spec.strip_prefix("scaled") {
        let c: f64 = rest
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("bad scale in `{spec}`")))?;
        return Ok(SquareMatrix::identity(d).scaled(c));
    }
    if let Some(rest) = spec.strip_prefix("equispaced") {
        let (lo, hi) = rest
            .trim()
            .split_once("..")
            .ok_or_else(|| Error::config(format!("expected `equispaced LO..HI`, got `{spec}`")))?;
        let lo: f64 = lo.trim().parse().map_err(|_| Error::config(format!("bad bound in `{spec}`")))?;
        let hi: f64 = hi.trim().parse().map_err(|_| Error::config(format!("bad bound in `{spec}`")))?;
        return Ok(SquareMatrix::diag(&equispaced(d, lo, hi)));
    }
    let entries: std::result::Result<Vec<f64>, _> =
        spec.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let entries = entries.map_err(|_| Error::config(format!("cannot parse matrix spec `{spec}`")))?;
    if entries.len() != d {
        return Err(Error::config(format!(
            "matrix spec `{spec}` has {} entries, d = {d}",
            entries.len()
        )));
    }
    Ok(SquareMatrix::diag(&entries))
}

fn parse_override(raw: &str, current: &toml::Value) -> Result<toml::Value> {
    let bad = || Error::config(format!("cannot parse value `{raw}`"));
    let scalar = |s: &str, like: &toml::Value| -> Result<toml::Value> {
        let s = s.trim();
        Ok(match like {
            toml::Value::Integer(_) => {
                let v: f64 = s.parse().map_err(|_| bad())?;
                if v.fract() != 0.0 || v < 0.0 {
                    return Err(bad());
                }
                toml::Value::Integer(v as i64)
            }
            toml::Value::Float(_) => toml::Value::Float(s.parse().map_err(|_| bad())?),
            toml::Value::Boolean(_) => toml::Value::Boolean(s.parse().map_err(|_| bad())?),
            _ => toml::Value::String(s.to_string()),
        })
    };
    match current {
        toml::Value::Array(items) => {
            let like = items
                .first()
                .cloned()
                .unwrap_or(toml::Value::String(String::new()));
            let values: Result<Vec<toml::Value>> =
                raw.split(',').map(|s| scalar(s, &like)).collect();
            Ok(toml::Value::Array(values?))
        }
        other => scalar(raw, other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for kind in [
            ExperimentKind::Rates,
            ExperimentKind::BiasVariance,
            ExperimentKind::Coverage,
            ExperimentKind::Minimax,
            ExperimentKind::IidBaseline,
            ExperimentKind::CvRho,
        ] {
            ExperimentConfig::load(kind, None, &[]).unwrap();
        }
    }

    #[test]
    fn overrides_apply() {
        let o = vec![
            ("reps".to_string(), "3".to_string()),
            ("ns".to_string(), "1000,1e4".to_string()),
            ("alphas".to_string(), "0.6".to_string()),
            ("estimators".to_string(), "regression,bm_burnin".to_string()),
            ("timing".to_string(), "true".to_string()),
        ];
        let cfg = ExperimentConfig::load(ExperimentKind::Rates, None, &o).unwrap();
        assert_eq!(cfg.reps, 3);
        assert_eq!(cfg.ns, vec![1000, 10_000]);
        assert_eq!(cfg.alphas, vec![0.6]);
        assert_eq!(cfg.estimator_specs().unwrap().len(), 2);
        assert!(cfg.timing);
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "reps = 7\nd = 4\nhessian = \"1,2,3,4\"\n").unwrap();
        let o = vec![("reps".to_string(), "9".to_string())];
        let cfg = ExperimentConfig::load(ExperimentKind::Rates, Some(&path), &o).unwrap();
        assert_eq!(cfg.reps, 9);
        assert_eq!(cfg.d, 4);
        assert_eq!(cfg.problem().unwrap().hessian(), &SquareMatrix::diag(&[1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn config_errors() {
        let bad = |k: &str, v: &str| {
            ExperimentConfig::load(ExperimentKind::Rates, None, &[(k.to_string(), v.to_string())])
                .unwrap_err()
        };
        assert!(matches!(bad("nonsense", "1"), Error::Config(_)));
        assert!(matches!(bad("alphas", "0.4"), Error::Config(_)));
        assert!(matches!(bad("reps", "two"), Error::Config(_)));
        assert!(matches!(bad("estimators", "bm_fancy"), Error::Config(_)));
        assert!(matches!(bad("hessian", "1,2"), Error::Config(_)));
        assert!(matches!(bad("ns", "10000000"), Error::Config(_)));
        // β = 2 is below the mixing threshold at α = 0.7
        assert!(matches!(bad("beta", "2"), Error::Config(_)));
    }

    #[test]
    fn nonmixing_override() {
        let o = vec![
            ("beta".to_string(), "2".to_string()),
            ("allow_nonmixing".to_string(), "true".to_string()),
        ];
        ExperimentConfig::load(ExperimentKind::Rates, None, &o).unwrap();
    }

    #[test]
    fn matrix_specs() {
        let h = parse_matrix_spec("equispaced 1..5", 5).unwrap();
        assert_eq!(h.diagonal().as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(parse_matrix_spec("scaled 2", 2).unwrap(), SquareMatrix::identity(2).scaled(2.0));
        assert!(parse_matrix_spec("equispaced 1-5", 2).is_err());
    }

    #[test]
    fn large_n_reps() {
        let cfg = ExperimentConfig::defaults(ExperimentKind::Rates);
        assert_eq!(cfg.reps_for(1_000_000), 200);
        assert_eq!(cfg.reps_for(3_000_000), 50);
    }
}

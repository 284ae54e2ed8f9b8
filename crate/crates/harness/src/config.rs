//! Experiment configuration files (TOML).
//!
//! ```toml
//! horizon = 100000        # rounds per replication
//! replications = 10
//! base_seed = 0
//! log_stride = 100        # keep every 100th round
//! output = "results"      # directory for regret.csv and config.toml
//!
//! [env]
//! preset = "single_sphere"
//! d = 5
//!
//! [[algo]]
//! kind = "single_ols"
//! epsilon = 1.0
//! ```
//!
//! Unknown keys are errors. [`parse_config`] fills every default in, so
//! serializing the result documents exactly what ran.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ldp_bandit_core::multi::default_s0;
use ldp_bandit_core::{EstimatorKind, Mode, WarmupStepRule};

use crate::presets::{EnvParams, Objective, PresetName};

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_HORIZON: usize = 100_000;
pub const DEFAULT_REPLICATIONS: usize = 10;
pub const DEFAULT_LOG_STRIDE: usize = 100;

/// A config error with the dotted key path it refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgoKind {
    SingleOls,
    SingleSgd,
    MultiOls,
    MultiSgd,
}

impl AlgoKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AlgoKind::SingleOls => "single_ols",
            AlgoKind::SingleSgd => "single_sgd",
            AlgoKind::MultiOls => "multi_ols",
            AlgoKind::MultiSgd => "multi_sgd",
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            AlgoKind::SingleOls | AlgoKind::SingleSgd => Mode::SingleParam,
            AlgoKind::MultiOls | AlgoKind::MultiSgd => Mode::MultiParam,
        }
    }

    pub fn estimator(self) -> EstimatorKind {
        match self {
            AlgoKind::SingleOls | AlgoKind::MultiOls => EstimatorKind::PrivateOls,
            AlgoKind::SingleSgd | AlgoKind::MultiSgd => EstimatorKind::PrivateSgd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmupStep {
    PerArm,
    RoundIndex,
}

impl From<WarmupStep> for WarmupStepRule {
    fn from(w: WarmupStep) -> Self {
        match w {
            WarmupStep::PerArm => WarmupStepRule::PerArmCount,
            WarmupStep::RoundIndex => WarmupStepRule::RoundIndex,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub preset: PresetName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_noise: Option<f64>,
    /// Seed for drawing random arm parameters (`multi_random`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<Objective>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pricing_csv: Option<PathBuf>,
}

impl EnvConfig {
    pub fn params(&self) -> EnvParams<'_> {
        let def = self.preset.defaults();
        EnvParams {
            preset: self.preset,
            d: self.d.unwrap_or(def.d),
            k: self.k.unwrap_or(def.k),
            sigma_noise: self.sigma_noise.unwrap_or(def.sigma_noise),
            param_seed: self.param_seed.unwrap_or(0),
            objective: self.objective.unwrap_or_default(),
            pricing_csv: self.pricing_csv.as_deref(),
        }
    }

    /// Decision-context dimension seen by the algorithms.
    pub fn context_dim(&self) -> usize {
        let d = self.params().d;
        match self.preset {
            PresetName::PricingSynthetic | PresetName::PricingCsv => 2 * d,
            _ => d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgoConfig {
    pub kind: AlgoKind,
    /// Name in the `algo` CSV column; defaults to the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noiseless: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Replaces the default OLS shift `c̃`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_tilde: Option<f64>,
    /// SGD step-size numerator; defaults to the context dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sgd_c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub project_unit_ball: Option<bool>,
    /// Warm-up pulls per arm (multi only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<usize>,
    /// Elimination gap (multi only); defaults to the preset's known gap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_opt_guess: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup_step: Option<WarmupStep>,
}

impl AlgoConfig {
    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.kind.as_str())
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(DEFAULT_DELTA)
    }

    pub fn noiseless(&self) -> bool {
        self.noiseless.unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_log_stride")]
    pub log_stride: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub env: EnvConfig,
    #[serde(rename = "algo")]
    pub algos: Vec<AlgoConfig>,
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}
fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}
fn default_log_stride() -> usize {
    DEFAULT_LOG_STRIDE
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}

/// Parses, validates and resolves defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::new("", e.to_string().trim_end()))?;
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        ConfigError::new(path, inner.trim_end())
    })?;
    cfg.resolve()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Validates and fills defaults in place. Idempotent.
    pub fn resolve(&mut self) -> Result<(), ConfigError> {
        if self.horizon == 0 {
            return Err(ConfigError::new("horizon", "must be at least 1"));
        }
        if self.replications == 0 {
            return Err(ConfigError::new("replications", "must be at least 1"));
        }
        if self.log_stride == 0 {
            return Err(ConfigError::new("log_stride", "must be at least 1"));
        }
        self.resolve_env()?;
        if self.algos.is_empty() {
            return Err(ConfigError::new("algo", "at least one [[algo]] entry is required"));
        }
        let env_mode = self.env.preset.mode();
        let p = self.env.params();
        let dim = self.env.context_dim();
        let mut seen = HashSet::new();
        for i in 0..self.algos.len() {
            let path = |key: &str| format!("algo[{i}].{key}");
            let horizon = self.horizon;
            let a = &mut self.algos[i];
            if a.kind.mode() != env_mode {
                return Err(ConfigError::new(
                    path("kind"),
                    format!("{} does not run on the {} preset", a.kind.as_str(), self.env.preset.as_str()),
                ));
            }
            if !(a.epsilon > 0.0 && a.epsilon.is_finite()) {
                return Err(ConfigError::new(path("epsilon"), "must be positive and finite"));
            }
            let delta = a.delta();
            if !(0.0..1.0).contains(&delta) {
                return Err(ConfigError::new(path("delta"), "must lie in [0, 1)"));
            }
            if a.kind.estimator() == EstimatorKind::PrivateOls && !a.noiseless() && delta == 0.0 {
                return Err(ConfigError::new(
                    path("delta"),
                    ldp_bandit_core::Error::GaussianRequiresDelta.to_string(),
                ));
            }
            let alpha = a.alpha.unwrap_or(DEFAULT_ALPHA);
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(ConfigError::new(path("alpha"), "must lie in (0, 1)"));
            }
            if let Some(c) = a.c_tilde {
                if a.kind.estimator() != EstimatorKind::PrivateOls {
                    return Err(ConfigError::new(path("c_tilde"), "only applies to OLS algorithms"));
                }
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(ConfigError::new(path("c_tilde"), "must be nonnegative"));
                }
            }
            if let Some(c0) = a.sgd_c0 {
                if a.kind.estimator() != EstimatorKind::PrivateSgd {
                    return Err(ConfigError::new(path("sgd_c0"), "only applies to SGD algorithms"));
                }
                if !(c0 > 0.0 && c0.is_finite()) {
                    return Err(ConfigError::new(path("sgd_c0"), "must be positive"));
                }
            }
            if a.project_unit_ball.is_some() && a.kind.estimator() != EstimatorKind::PrivateSgd {
                return Err(ConfigError::new(path("project_unit_ball"), "only applies to SGD algorithms"));
            }
            if a.kind.mode() == Mode::SingleParam {
                for (key, set) in [
                    ("s0", a.s0.is_some()),
                    ("h", a.h.is_some()),
                    ("k_opt_guess", a.k_opt_guess.is_some()),
                    ("warmup_step", a.warmup_step.is_some()),
                ] {
                    if set {
                        return Err(ConfigError::new(path(key), "only applies to multi_* algorithms"));
                    }
                }
            } else {
                let s0 = a.s0.unwrap_or_else(|| default_s0(p.k, dim, horizon, alpha, a.epsilon));
                if s0 == 0 {
                    return Err(ConfigError::new(path("s0"), "must be at least 1"));
                }
                if p.k * s0 > horizon {
                    return Err(ConfigError::new(
                        path("s0"),
                        format!("K·s0 = {} exceeds horizon {horizon}", p.k * s0),
                    ));
                }
                a.s0 = Some(s0);
                let h = match (a.h, known_gap(self.env.preset)) {
                    (Some(h), _) => h,
                    (None, Some(g)) => g,
                    (None, None) => {
                        return Err(ConfigError::new(path("h"), "required: this preset has no known gap"));
                    }
                };
                if !(h > 0.0 && h.is_finite()) {
                    return Err(ConfigError::new(path("h"), "must be positive"));
                }
                a.h = Some(h);
                let k_opt = a.k_opt_guess.unwrap_or(p.k);
                if k_opt == 0 {
                    return Err(ConfigError::new(path("k_opt_guess"), "must be positive"));
                }
                a.k_opt_guess = Some(k_opt);
                a.warmup_step.get_or_insert(WarmupStep::PerArm);
            }
            if a.kind.estimator() == EstimatorKind::PrivateSgd {
                a.sgd_c0.get_or_insert(dim as f64);
                a.project_unit_ball.get_or_insert(false);
            }
            a.delta = Some(delta);
            a.alpha = Some(alpha);
            a.noiseless.get_or_insert(false);
            if a.label.as_deref().is_some_and(|l| l.is_empty() || l.contains([',', '"', '\n'])) {
                return Err(ConfigError::new(path("label"), "must be non-empty without commas, quotes or newlines"));
            }
            a.label.get_or_insert_with(|| a.kind.as_str().to_string());
            let key = (a.label().to_string(), a.epsilon.to_bits(), delta.to_bits());
            if !seen.insert(key) {
                return Err(ConfigError::new(
                    path("label"),
                    "duplicate (label, epsilon, delta); give the entries distinct labels",
                ));
            }
        }
        Ok(())
    }

    fn resolve_env(&mut self) -> Result<(), ConfigError> {
        let e = &mut self.env;
        let def = e.preset.defaults();
        let is_pricing = matches!(e.preset, PresetName::PricingSynthetic | PresetName::PricingCsv);
        if e.preset == PresetName::PricingCsv {
            if e.d.is_some() {
                return Err(ConfigError::new("env.d", "pricing_csv takes its dimension from the file"));
            }
            if e.pricing_csv.is_none() {
                return Err(ConfigError::new("env.pricing_csv", "required by the pricing_csv preset"));
            }
        } else if e.pricing_csv.is_some() {
            return Err(ConfigError::new("env.pricing_csv", "only applies to the pricing_csv preset"));
        }
        if e.objective.is_some() && !is_pricing {
            return Err(ConfigError::new("env.objective", "only applies to pricing presets"));
        }
        if e.param_seed.is_some() && e.preset != PresetName::MultiRandom {
            return Err(ConfigError::new("env.param_seed", "only applies to multi_random"));
        }
        if let Some(k) = e.k {
            if !e.preset.k_is_free() && k != def.k {
                return Err(ConfigError::new("env.k", format!("{} has exactly {} arms", e.preset.as_str(), def.k)));
            }
            if k == 0 {
                return Err(ConfigError::new("env.k", "must be at least 1"));
            }
        }
        if let Some(s) = e.sigma_noise {
            if !e.preset.has_gaussian_noise() {
                return Err(ConfigError::new("env.sigma_noise", "this preset has Bernoulli rewards"));
            }
            if !(s >= 0.0 && s.is_finite()) {
                return Err(ConfigError::new("env.sigma_noise", "must be nonnegative"));
            }
        }
        let min_d = if e.preset == PresetName::MultiSeparated { 2 } else { 1 };
        if e.d.is_some_and(|d| d < min_d) {
            return Err(ConfigError::new("env.d", format!("must be at least {min_d}")));
        }
        if e.preset != PresetName::PricingCsv {
            e.d.get_or_insert(def.d);
        }
        e.k.get_or_insert(def.k);
        if e.preset.has_gaussian_noise() {
            e.sigma_noise.get_or_insert(def.sigma_noise);
        }
        if is_pricing {
            e.objective.get_or_insert_with(Objective::default);
        }
        if e.preset == PresetName::MultiRandom {
            e.param_seed.get_or_insert(0);
        }
        Ok(())
    }
}

fn known_gap(preset: PresetName) -> Option<f64> {
    match preset {
        PresetName::MultiSeparated => Some(1.6 * std::f64::consts::FRAC_1_SQRT_2),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
horizon = 1000
[env]
preset = "single_sphere"
[[algo]]
kind = "single_ols"
epsilon = 1.0
"#;

    #[test]
    fn minimal_config_fills_defaults_and_round_trips() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.replications, DEFAULT_REPLICATIONS);
        assert_eq!(cfg.log_stride, DEFAULT_LOG_STRIDE);
        assert_eq!(cfg.env.d, Some(5));
        assert_eq!(cfg.env.k, Some(10));
        assert_eq!(cfg.algos[0].delta, Some(DEFAULT_DELTA));
        assert_eq!(cfg.algos[0].label.as_deref(), Some("single_ols"));
        let text = cfg.to_toml();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }

    #[test]
    fn zero_replications_is_rejected() {
        let err = parse_config(&format!("replications = 0\n{MINIMAL}")).unwrap_err();
        assert_eq!(err.path, "replications");
    }

    #[test]
    fn zero_delta_with_ols_is_rejected() {
        let text = MINIMAL.replace("epsilon = 1.0", "epsilon = 1.0\ndelta = 0.0");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.path, "algo[0].delta");
        assert!(err.to_string().contains("Gaussian mechanism requires δ>0"));
        let sgd = text.replace("single_ols", "single_sgd");
        assert!(parse_config(&sgd).is_ok());
    }

    #[test]
    fn unknown_keys_report_their_path() {
        let err = parse_config(&MINIMAL.replace("epsilon = 1.0", "epsilon = 1.0\nepsilonn = 2")).unwrap_err();
        assert_eq!(err.path, "algo[0].epsilonn");
        assert!(err.message.contains("unknown field"), "{err}");
        let err = parse_config(&MINIMAL.replace("[env]", "[env]\nsize = 3")).unwrap_err();
        assert!(err.to_string().starts_with("env"), "{err}");
    }

    #[test]
    fn type_mismatch_reports_path() {
        let err = parse_config(&MINIMAL.replace("epsilon = 1.0", "epsilon = \"one\"")).unwrap_err();
        assert_eq!(err.path, "algo[0].epsilon");
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let err = parse_config(&MINIMAL.replace("single_sphere", "multi_separated")).unwrap_err();
        assert_eq!(err.path, "algo[0].kind");
    }

    #[test]
    fn multi_defaults_are_resolved() {
        let text = MINIMAL
            .replace("single_sphere", "multi_separated")
            .replace("single_ols", "multi_ols");
        let cfg = parse_config(&text).unwrap();
        let a = &cfg.algos[0];
        assert_eq!(a.s0, Some(default_s0(3, 3, 1000, 0.05, 1.0)));
        assert!((a.h.unwrap() - 1.6 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.k_opt_guess, Some(3));
        assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn multi_knobs_on_single_algo_are_rejected() {
        let err = parse_config(&MINIMAL.replace("epsilon = 1.0", "epsilon = 1.0\ns0 = 5")).unwrap_err();
        assert_eq!(err.path, "algo[0].s0");
    }

    #[test]
    fn duplicate_labels_are_rejected() {
        let text = format!("{MINIMAL}[[algo]]\nkind = \"single_ols\"\nepsilon = 1.0\n");
        assert_eq!(parse_config(&text).unwrap_err().path, "algo[1].label");
    }
}

//! Named environments.
//!
//! Dimensions and arm counts are our own desk-scale choices; each preset
//! documents its defaults, which the config may override.

use std::path::Path;

use serde::{Deserialize, Serialize};

use ldp_bandit_core::envs::{make_pricing_env, uniform_price_grid, MAX_PRICE};
use ldp_bandit_core::rng::rng_from_seed;
use ldp_bandit_core::{presets, EnvSpec, FeatureSource, Mode, PricingObjective};

use crate::pricing;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    /// Identity link, unit-sphere contexts, `θ* = (1, …, 1)/√d`.
    SingleSphere,
    /// Logistic link with Bernoulli rewards.
    SingleLogistic,
    /// Three arms, one of them worse than the best by `1.6/√2` everywhere.
    MultiSeparated,
    /// Arm parameters drawn uniformly on the unit sphere.
    MultiRandom,
    /// 25-price logit-demand pricing with unit-sphere customer features.
    PricingSynthetic,
    /// Pricing with customer features loaded from a CSV file.
    PricingCsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    Acceptance,
    Revenue,
}

impl From<Objective> for PricingObjective {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Acceptance => PricingObjective::Acceptance,
            Objective::Revenue => PricingObjective::Revenue,
        }
    }
}

/// Default knobs of a preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetDefaults {
    pub d: usize,
    pub k: usize,
    pub sigma_noise: f64,
}

impl PresetName {
    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::SingleSphere => "single_sphere",
            PresetName::SingleLogistic => "single_logistic",
            PresetName::MultiSeparated => "multi_separated",
            PresetName::MultiRandom => "multi_random",
            PresetName::PricingSynthetic => "pricing_synthetic",
            PresetName::PricingCsv => "pricing_csv",
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            PresetName::MultiSeparated | PresetName::MultiRandom => Mode::MultiParam,
            _ => Mode::SingleParam,
        }
    }

    /// For pricing presets `d` is the customer feature dimension and the
    /// decision context has dimension `2d`.
    pub fn defaults(self) -> PresetDefaults {
        match self {
            PresetName::SingleSphere | PresetName::SingleLogistic => PresetDefaults {
                d: 5,
                k: 10,
                sigma_noise: 0.1,
            },
            PresetName::MultiSeparated => PresetDefaults {
                d: 3,
                k: 3,
                sigma_noise: 0.1,
            },
            PresetName::MultiRandom => PresetDefaults {
                d: 5,
                k: 5,
                sigma_noise: 0.1,
            },
            PresetName::PricingSynthetic | PresetName::PricingCsv => PresetDefaults {
                d: 4,
                k: PRICE_LEVELS,
                sigma_noise: 0.0,
            },
        }
    }

    /// Whether `k` may differ from the default.
    pub fn k_is_free(self) -> bool {
        matches!(
            self,
            PresetName::SingleSphere | PresetName::SingleLogistic | PresetName::MultiRandom
        )
    }

    pub fn has_gaussian_noise(self) -> bool {
        matches!(
            self,
            PresetName::SingleSphere | PresetName::MultiSeparated | PresetName::MultiRandom
        )
    }
}

/// Number of price options on `[0, 25000]`.
pub const PRICE_LEVELS: usize = 25;

/// Resolved environment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvParams<'a> {
    pub preset: PresetName,
    pub d: usize,
    pub k: usize,
    pub sigma_noise: f64,
    pub param_seed: u64,
    pub objective: Objective,
    pub pricing_csv: Option<&'a Path>,
}

pub fn build_env(p: &EnvParams<'_>) -> anyhow::Result<EnvSpec<f64>> {
    let env = match p.preset {
        PresetName::SingleSphere => presets::single_sphere(p.d, p.k, p.sigma_noise)?,
        PresetName::SingleLogistic => presets::single_logistic(p.d, p.k)?,
        PresetName::MultiSeparated => presets::multi_separated(p.d, p.sigma_noise)?,
        PresetName::MultiRandom => {
            presets::multi_random(p.d, p.k, p.sigma_noise, &mut rng_from_seed(p.param_seed))?
        }
        PresetName::PricingSynthetic => {
            let theta = presets::pricing_synthetic::<f64>(p.d)?.theta_star()[0].clone();
            make_pricing_env(
                theta,
                uniform_price_grid(0.0, MAX_PRICE, PRICE_LEVELS),
                FeatureSource::UnitSphere(p.d),
                MAX_PRICE,
                p.objective.into(),
            )?
        }
        PresetName::PricingCsv => {
            let path = p
                .pricing_csv
                .ok_or_else(|| anyhow::anyhow!("env.pricing_csv: required by the pricing_csv preset"))?;
            let table = pricing::load_pricing_csv(path)?;
            let theta = pricing::fit_theta(&table)?;
            make_pricing_env(
                theta,
                uniform_price_grid(0.0, MAX_PRICE, PRICE_LEVELS),
                FeatureSource::Table(table.features),
                MAX_PRICE,
                p.objective.into(),
            )?
        }
    };
    Ok(env)
}

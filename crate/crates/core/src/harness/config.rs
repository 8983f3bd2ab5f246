//! Versioned experiment configuration and name resolution against the
//! strategy and rate registries.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::environment::EnvironmentSpec;
use crate::algorithms::LambdaMode;
use crate::bounds::{AdaptiveRate, RATE_KINDS};
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::ladder::RadiusLadder;
use crate::relaxation::TwoLevelRelaxation;
use crate::rng::RngSpec;

/// Schema version accepted by [`ExperimentConfig`].
pub const CONFIG_VERSION: u32 = 1;
/// Registered strategy names.
pub const STRATEGY_NAMES: [&str; 1] = ["two-level-ew"];
/// Rate name that audits a strategy against the rate its relaxation certifies.
pub const LADDER_RATE: &str = "ladder";

fn default_strategy_name() -> String {
    STRATEGY_NAMES[0].to_string()
}

/// Strategy name and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    #[serde(default = "default_strategy_name")]
    pub name: String,
    /// Prior over experts; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Distribution>,
    /// Number of ladder rungs; sized from `n` and `K` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_max: Option<usize>,
    #[serde(default)]
    pub lambda_mode: LambdaMode,
}

impl Default for StrategySpec {
    fn default() -> Self {
        Self {
            name: default_strategy_name(),
            prior: None,
            i_max: None,
            lambda_mode: LambdaMode::default(),
        }
    }
}

impl StrategySpec {
    /// Builds the strategy's relaxation for `k` experts and horizon `n`.
    pub fn relaxation(&self, k: usize, n: usize) -> Result<TwoLevelRelaxation> {
        if !STRATEGY_NAMES.contains(&self.name.as_str()) {
            return Err(Error::UnknownName {
                kind: "strategy",
                name: self.name.clone(),
                known: STRATEGY_NAMES.join(", "),
            });
        }
        let prior = match &self.prior {
            Some(p) if p.support_size() != k => {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: p.support_size(),
                })
            }
            Some(p) => p.clone(),
            None => Distribution::uniform(k)?,
        };
        let ladder = match self.i_max {
            Some(i) => RadiusLadder::new(i)?,
            None => RadiusLadder::default_for(n, k),
        };
        TwoLevelRelaxation::new(prior, ladder, n, self.lambda_mode)
    }
}

/// A rate to audit: a registry name resolved with defaults, or full parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateRef {
    Named(String),
    Explicit(AdaptiveRate),
}

/// A resolved audit rate.
#[derive(Debug, Clone, PartialEq)]
pub enum AuditRate {
    /// The strategy relaxation's own target rate.
    Ladder,
    Adaptive(AdaptiveRate),
}

impl AuditRate {
    pub fn label(&self) -> &'static str {
        match self {
            AuditRate::Ladder => LADDER_RATE,
            AuditRate::Adaptive(r) => r.kind(),
        }
    }
}

/// Resolves a rate name for a `k`-decision game with the given prior.
pub fn resolve_rate_name(name: &str, k: usize, prior: &Distribution) -> Result<AuditRate> {
    let rate = match name {
        LADDER_RATE => return Ok(AuditRate::Ladder),
        "kl_radius" => AdaptiveRate::KlRadius {
            prior: prior.clone(),
        },
        "pac_bayes" | "pacbayes" => AdaptiveRate::PacBayes {
            prior: prior.clone(),
        },
        "fixed_vs_best" => AdaptiveRate::FixedVsBest {
            reference: 0,
            class_size: None,
        },
        "norm_adaptive" => AdaptiveRate::NormAdaptive { smoothness: 1.0 },
        "spectral" => AdaptiveRate::Spectral { dim: k },
        other if RATE_KINDS.contains(&other) => {
            return Err(Error::Incompatible(format!(
                "rate `{other}` has no defaults; give its parameters explicitly"
            )))
        }
        other => {
            let mut known: Vec<&str> = RATE_KINDS.to_vec();
            known.push(LADDER_RATE);
            return Err(Error::UnknownName {
                kind: "rate",
                name: other.to_string(),
                known: known.join(", "),
            });
        }
    };
    Ok(AuditRate::Adaptive(rate))
}

impl RateRef {
    pub fn resolve(&self, k: usize, prior: &Distribution) -> Result<AuditRate> {
        match self {
            RateRef::Named(name) => resolve_rate_name(name, k, prior),
            RateRef::Explicit(rate) => Ok(AuditRate::Adaptive(rate.clone())),
        }
    }
}

fn default_resolution() -> usize {
    16
}
fn default_max_points() -> usize {
    5000
}
fn yes() -> bool {
    true
}

/// Comparator grid for experts games.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Simplex grid step `1/resolution`.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Beyond this many simplex points, a seeded uniform sample of this size is used.
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    /// Adds top-`m` uniform mixtures and KL-ball minimizers per ladder rung.
    #[serde(default = "yes")]
    pub refinements: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            resolution: default_resolution(),
            max_points: default_max_points(),
            refinements: true,
        }
    }
}

/// Where results go.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub json: Option<PathBuf>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

fn default_rates() -> Vec<RateRef> {
    vec![
        RateRef::Named("kl_radius".into()),
        RateRef::Named(LADDER_RATE.into()),
    ]
}
fn one() -> usize {
    1
}

/// Full description of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub environment: EnvironmentSpec,
    #[serde(default)]
    pub strategy: StrategySpec,
    #[serde(default = "default_rates")]
    pub rates: Vec<RateRef>,
    pub horizon: usize,
    #[serde(default = "one")]
    pub replicates: usize,
    pub rng: RngSpec,
    #[serde(default)]
    pub grid: GridSpec,
    /// Also records a sampled action per round; audits always use expected loss.
    #[serde(default)]
    pub sample_predictions: bool,
    /// Output locations; not echoed into reports so reruns elsewhere stay byte-identical.
    #[serde(default, skip_serializing)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::invalid(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be at least 1"));
        }
        if self.rates.is_empty() {
            return Err(Error::invalid("at least one rate must be audited"));
        }
        if self.grid.resolution == 0 {
            return Err(Error::invalid("grid resolution must be positive"));
        }
        self.rng.validate()?;
        self.environment.validate()
    }

    /// Parses a JSON config; relative environment and output paths resolve against `base`.
    pub fn from_json_str(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        let env = value
            .get_mut("environment")
            .map(serde_json::Value::take)
            .ok_or_else(|| Error::invalid("config is missing `environment`"))?;
        let env = EnvironmentSpec::from_json(env)?;
        value["environment"] = serde_json::to_value(&env)?;
        let mut cfg: ExperimentConfig = serde_json::from_value(value)?;
        if let Some(base) = base {
            cfg.environment = cfg.environment.rebased(base);
            for path in [&mut cfg.output.json, &mut cfg.output.csv]
                .into_iter()
                .flatten()
            {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, path.parent())
    }
}

use serde::{Deserialize, Serialize};

use crate::complexity::{CoverNorm, CoverProfile, FunctionTable};
use crate::error::{Error, Result};

/// Source of `log N₂(δ)` for entropy-based rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoveringProfile {
    /// Internal covers of a finite class on a fixed tree.
    FiniteClass { covers: CoverProfile },
    /// `log N₂(δ) = δ^{-p}` with `0 < p < 2`.
    AnalyticPowerLaw { p: f64 },
}

/// How the profile was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    FiniteClassExact,
    Greedy,
    AnalyticPowerLaw,
}

impl CoveringProfile {
    pub fn analytic(p: f64) -> Result<Self> {
        let profile = Self::AnalyticPowerLaw { p };
        profile.validate()?;
        Ok(profile)
    }

    pub fn from_table(table: &FunctionTable, norm: CoverNorm) -> Result<Self> {
        Ok(Self::FiniteClass {
            covers: CoverProfile::build(table, norm)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::AnalyticPowerLaw { p } if !(*p > 0.0 && *p < 2.0) => Err(Error::invalid(
                format!("analytic covering exponent must satisfy 0 < p < 2, got {p}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn mode(&self) -> ProfileMode {
        match self {
            Self::FiniteClass { covers } if covers.exact => ProfileMode::FiniteClassExact,
            Self::FiniteClass { .. } => ProfileMode::Greedy,
            Self::AnalyticPowerLaw { .. } => ProfileMode::AnalyticPowerLaw,
        }
    }

    /// `log N₂(δ)` for `δ > 0`.
    pub fn log_n2(&self, delta: f64) -> f64 {
        match self {
            Self::FiniteClass { covers } => covers.log_size_at(delta),
            Self::AnalyticPowerLaw { p } => delta.powf(-p),
        }
    }
}

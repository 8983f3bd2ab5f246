//! Catalog of adaptive regret rates `B_n(f; y_{1:n})` as pure evaluators.

mod formulas;
mod profile;
mod spectral;

use serde::{Deserialize, Serialize};

pub use formulas::{
    fixed_vs_best_rate, generic_radius_rate, kl_radius_rate, norm_adaptive_rate, pacbayes_rate,
    predictable_rate, spectral_rate, RadiusTable, GENERIC_K1, GENERIC_K2, PREDICTABLE_K1,
    PREDICTABLE_K2, UNIT_BALL_SLACK,
};
pub use profile::{CoveringProfile, ProfileMode};
pub use spectral::{lambda_max, second_moment, MAX_POWER_ITERATIONS, RAYLEIGH_TOLERANCE};

use crate::distribution::{kl_divergence, Distribution};
use crate::error::{Error, Result};

/// Names accepted for [`AdaptiveRate`] kinds.
pub const RATE_KINDS: &[&str] = &[
    "spectral",
    "predictable",
    "fixed_vs_best",
    "pac_bayes",
    "kl_radius",
    "norm_adaptive",
    "generic_radius",
    "uniform_constant",
];

fn default_k1() -> f64 {
    GENERIC_K1
}
fn default_k2() -> f64 {
    GENERIC_K2
}
fn default_gamma() -> f64 {
    1.0
}
fn default_smoothness() -> f64 {
    1.0
}

/// A rate together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdaptiveRate {
    /// Depends on the outcome vectors only.
    Spectral {
        dim: usize,
    },
    /// Uses per-round comparator losses against a predictable guess (zero when absent).
    Predictable {
        profile: CoveringProfile,
        #[serde(default)]
        guesses: Option<Vec<f64>>,
    },
    /// Compares the comparator's losses to a reference expert chosen in advance.
    FixedVsBest {
        reference: usize,
        /// Class size `N`; defaults to the number of decisions.
        #[serde(default)]
        class_size: Option<usize>,
    },
    PacBayes {
        prior: Distribution,
    },
    KlRadius {
        prior: Distribution,
    },
    /// Evaluated at `max(‖f‖₂, 1)`.
    NormAdaptive {
        #[serde(default = "default_smoothness")]
        smoothness: f64,
    },
    /// Radius is `KL(f | prior)` when a prior is given, else `‖f‖₂`.
    GenericRadius {
        table: RadiusTable,
        #[serde(default = "default_k1")]
        k1: f64,
        #[serde(default = "default_k2")]
        k2: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default)]
        prior: Option<Distribution>,
    },
    UniformConstant {
        value: f64,
    },
}

/// Everything a rate may look at for one comparator.
#[derive(Debug, Clone, Copy)]
pub struct RateInput<'a> {
    /// Comparator weights (a distribution over decisions, or a point).
    pub comparator: &'a [f64],
    /// Outcome vectors `y_{1:n}`.
    pub outcomes: &'a [Vec<f64>],
    /// Comparator loss per round.
    pub comparator_losses: &'a [f64],
}

impl AdaptiveRate {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Spectral { .. } => "spectral",
            Self::Predictable { .. } => "predictable",
            Self::FixedVsBest { .. } => "fixed_vs_best",
            Self::PacBayes { .. } => "pac_bayes",
            Self::KlRadius { .. } => "kl_radius",
            Self::NormAdaptive { .. } => "norm_adaptive",
            Self::GenericRadius { .. } => "generic_radius",
            Self::UniformConstant { .. } => "uniform_constant",
        }
    }

    pub fn evaluate(&self, input: &RateInput<'_>) -> Result<f64> {
        let n = input.outcomes.len();
        if input.comparator_losses.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: input.comparator_losses.len(),
            });
        }
        let as_dist = || Distribution::new(input.comparator.to_vec());
        match self {
            Self::Spectral { dim } => spectral_rate(input.outcomes, *dim),
            Self::Predictable { profile, guesses } => {
                let zeros;
                let m = match guesses {
                    Some(g) => g.as_slice(),
                    None => {
                        zeros = vec![0.0; n];
                        zeros.as_slice()
                    }
                };
                predictable_rate(input.comparator_losses, m, profile, n)
            }
            Self::FixedVsBest {
                reference,
                class_size,
            } => {
                let k = input.comparator.len();
                if *reference >= k {
                    return Err(Error::IndexOutOfRange {
                        what: "reference expert",
                        index: *reference,
                        size: k,
                    });
                }
                let fstar: Vec<f64> = input.outcomes.iter().map(|y| y[*reference]).collect();
                fixed_vs_best_rate(input.comparator_losses, &fstar, class_size.unwrap_or(k))
            }
            Self::PacBayes { prior } => pacbayes_rate(&as_dist()?, prior, input.outcomes),
            Self::KlRadius { prior } => kl_radius_rate(&as_dist()?, prior, n),
            Self::NormAdaptive { smoothness } => {
                let norm = input.comparator.iter().map(|x| x * x).sum::<f64>().sqrt();
                norm_adaptive_rate(norm.max(1.0), *smoothness, n)
            }
            Self::GenericRadius {
                table,
                k1,
                k2,
                gamma,
                prior,
            } => {
                let radius = match prior {
                    Some(pi) => kl_divergence(&as_dist()?, pi)?,
                    None => input.comparator.iter().map(|x| x * x).sum::<f64>().sqrt(),
                };
                generic_radius_rate(radius, table, *k1, *k2, *gamma, n)
            }
            Self::UniformConstant { value } => {
                if value.is_finite() {
                    Ok(*value)
                } else {
                    Err(Error::invalid("constant rate must be finite"))
                }
            }
        }
    }
}

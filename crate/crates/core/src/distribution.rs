//! Probability vectors over finite sets and the two primitives built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Absolute tolerance on the total mass of a [`Distribution`].
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A probability vector. Weights are nonnegative and sum to one within
/// [`MASS_TOLERANCE`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    /// Validates and wraps `weights`.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("distribution needs at least one atom"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::invalid(format!(
                "distribution weight {w} is not a finite nonnegative number"
            )));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::invalid(format!(
                "distribution weights sum to {total}, not 1"
            )));
        }
        Ok(Self { weights })
    }

    /// Rescales nonnegative weights to unit mass.
    pub fn from_unnormalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid(
                "unnormalized weights must be finite and nonnegative",
            ));
        }
        let total = compensated_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::EmptySupport);
        }
        Ok(Self::renormalized(
            weights.into_iter().map(|w| w / total).collect(),
        ))
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("uniform distribution over an empty set"));
        }
        Ok(Self {
            weights: vec![1.0 / k as f64; k],
        })
    }

    pub fn point_mass(k: usize, index: usize) -> Result<Self> {
        if index >= k {
            return Err(Error::IndexOutOfRange {
                what: "atom",
                index,
                size: k,
            });
        }
        let mut weights = vec![0.0; k];
        weights[index] = 1.0;
        Ok(Self { weights })
    }

    /// Divides by the compensated total once more so rounding in the caller
    /// cannot push the mass outside tolerance.
    fn renormalized(mut weights: Vec<f64>) -> Self {
        let total = compensated_sum(weights.iter().copied());
        if total != 1.0 {
            for w in &mut weights {
                *w /= total;
            }
        }
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    /// Convex combination `Σ_j coef_j · parts_j`.
    pub fn mixture(coefficients: &Distribution, parts: &[Distribution]) -> Result<Self> {
        if coefficients.support_size() != parts.len() {
            return Err(Error::DimensionMismatch {
                expected: coefficients.support_size(),
                found: parts.len(),
            });
        }
        let k = parts[0].support_size();
        if let Some(p) = parts.iter().find(|p| p.support_size() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: p.support_size(),
            });
        }
        let weights = (0..k)
            .map(|a| {
                compensated_sum(
                    coefficients
                        .weights
                        .iter()
                        .zip(parts)
                        .map(|(c, p)| c * p.weights[a]),
                )
            })
            .collect();
        Ok(Self::renormalized(weights))
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.weights
    }
}

/// Max-shift softmax. Entries may be `-inf` (zero weight) but not all of them.
pub fn normalize_log_weights(logw: &[f64]) -> Result<Distribution> {
    if logw.is_empty() {
        return Err(Error::invalid("log-weights must be non-empty"));
    }
    if logw.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
        return Err(Error::invalid("log-weights must be finite or -inf"));
    }
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::EmptySupport);
    }
    let raw: Vec<f64> = logw.iter().map(|x| (x - max).exp()).collect();
    let total = compensated_sum(raw.iter().copied());
    Ok(Distribution::renormalized(
        raw.into_iter().map(|w| w / total).collect(),
    ))
}

/// `KL(f | π)` in nats; `+inf` when `f` charges an atom that `π` does not.
pub fn kl_divergence(f: &Distribution, pi: &Distribution) -> Result<f64> {
    if f.support_size() != pi.support_size() {
        return Err(Error::DimensionMismatch {
            expected: pi.support_size(),
            found: f.support_size(),
        });
    }
    let mut terms = Vec::with_capacity(f.support_size());
    for (&fi, &pi_i) in f.weights.iter().zip(&pi.weights) {
        if fi == 0.0 {
            continue;
        }
        if pi_i == 0.0 {
            return Ok(f64::INFINITY);
        }
        terms.push(fi * (fi / pi_i).ln());
    }
    Ok(compensated_sum(terms).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_examples() {
        let d = normalize_log_weights(&[0.0, 0.0]).unwrap();
        assert_eq!(d.weights(), &[0.5, 0.5]);

        let d = normalize_log_weights(&[-1.0, 0.0]).unwrap();
        let e = std::f64::consts::E;
        assert!((d.weights()[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((d.weights()[1] - e / (1.0 + e)).abs() < 1e-15);

        let d = normalize_log_weights(&[-1000.0, 0.0, -1000.0]).unwrap();
        assert!(d.weights()[0] < 1e-300 && d.weights()[2] < 1e-300);
        assert_eq!(d.weights()[1], 1.0);
    }

    #[test]
    fn softmax_rejects_empty_support() {
        let err = normalize_log_weights(&[f64::NEG_INFINITY; 3]).unwrap_err();
        assert!(err.to_string().contains("empty support"));
    }

    #[test]
    fn kl_examples() {
        let u = Distribution::uniform(2).unwrap();
        assert_eq!(kl_divergence(&u, &u).unwrap(), 0.0);
        let e1 = Distribution::point_mass(2, 0).unwrap();
        assert!((kl_divergence(&e1, &u).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kl_divergence(&u, &e1).unwrap(), f64::INFINITY);
        let three = Distribution::uniform(3).unwrap();
        assert!(kl_divergence(&u, &three).is_err());
    }

    #[test]
    fn kl_matches_direct_summation() {
        // Terms written out by hand: 0.7 ln 1.4 + 0.3 ln 0.6.
        let f = Distribution::new(vec![0.7, 0.3]).unwrap();
        let u = Distribution::uniform(2).unwrap();
        let direct = 0.7 * 1.4f64.ln() + 0.3 * 0.6f64.ln();
        assert!((kl_divergence(&f, &u).unwrap() - direct).abs() < 1e-12);
        assert!((direct - 0.082_282_878_505_051_85).abs() < 1e-15);
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![-0.1, 1.1]).is_err());
        assert!(Distribution::new(vec![]).is_err());
        let d: Distribution = serde_json::from_str("[0.25,0.75]").unwrap();
        assert_eq!(serde_json::to_string(&d).unwrap(), "[0.25,0.75]");
        assert!(serde_json::from_str::<Distribution>("[0.2,0.2]").is_err());
    }

    #[test]
    fn mixture_is_convex_combination() {
        let c = Distribution::new(vec![0.25, 0.75]).unwrap();
        let a = Distribution::point_mass(2, 0).unwrap();
        let b = Distribution::uniform(2).unwrap();
        let m = Distribution::mixture(&c, &[a, b]).unwrap();
        assert!((m.weights()[0] - 0.625).abs() < 1e-15);
    }
}

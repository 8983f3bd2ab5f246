use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Doubling radii `R_i = 2^{i−1}` for `i = 1..=i_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LadderRepr", into = "LadderRepr")]
pub struct RadiusLadder {
    i_max: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LadderRepr {
    i_max: usize,
}

impl TryFrom<LadderRepr> for RadiusLadder {
    type Error = Error;

    fn try_from(r: LadderRepr) -> Result<Self> {
        Self::new(r.i_max)
    }
}

impl From<RadiusLadder> for LadderRepr {
    fn from(l: RadiusLadder) -> Self {
        LadderRepr { i_max: l.i_max }
    }
}

impl RadiusLadder {
    pub fn new(i_max: usize) -> Result<Self> {
        if i_max == 0 || i_max > 60 {
            return Err(Error::invalid(format!(
                "ladder length must be in 1..=60, got {i_max}"
            )));
        }
        Ok(Self { i_max })
    }

    /// Default truncation `⌈log2(n log K + 1)⌉ + 1`: past it every rung's
    /// offset exceeds any achievable regret.
    pub fn default_for(n: usize, k: usize) -> Self {
        let x = n as f64 * (k.max(1) as f64).ln() + 1.0;
        let i_max = (x.log2().ceil() as usize + 1).clamp(1, 60);
        Self { i_max }
    }

    pub fn i_max(&self) -> usize {
        self.i_max
    }

    /// Radius of rung `i` (1-based).
    pub fn radius(&self, i: usize) -> f64 {
        debug_assert!(i >= 1 && i <= self.i_max);
        2f64.powi(i as i32 - 1)
    }

    pub fn radii(&self) -> Vec<f64> {
        (1..=self.i_max).map(|i| self.radius(i)).collect()
    }

    /// Smallest rung (1-based) whose radius is at least `r`, if any.
    pub fn rung_covering(&self, r: f64) -> Option<usize> {
        (1..=self.i_max).find(|&i| self.radius(i) >= r)
    }
}

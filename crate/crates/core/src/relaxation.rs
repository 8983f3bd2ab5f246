//! Relaxations: a value function over outcome prefixes paired with the
//! strategy it induces.

use serde::{Deserialize, Serialize};

use crate::algorithms::{kl_ball_minimizer, LambdaMode, TwoLevelState};
use crate::distribution::{kl_divergence, Distribution};
use crate::error::{Error, Result};
use crate::ladder::RadiusLadder;

/// Value function `Rel(y_{1:t})` with an incremental state and its strategy.
pub trait Relaxation: Sync {
    type State: Clone + Send + Sync;

    fn horizon(&self) -> usize;

    fn num_decisions(&self) -> usize;

    /// State at the empty prefix.
    fn initial_state(&self) -> Result<Self::State>;

    /// State after appending outcome vector `y`.
    fn advance(&self, state: &Self::State, y: &[f64]) -> Result<Self::State>;

    fn value(&self, state: &Self::State) -> f64;

    /// Distribution over decisions played after the prefix.
    fn strategy(&self, state: &Self::State) -> Result<Distribution>;

    /// Rate the relaxation certifies for comparator `f` on a full sequence.
    fn target_rate(&self, comparator: &Distribution, outcomes: &[Vec<f64>]) -> Result<f64>;

    /// Extra comparators that sharpen the comparator infimum at a leaf.
    fn candidate_comparators(&self, cumulative_losses: &[f64]) -> Result<Vec<Distribution>>;
}

/// The two-level exponential weights relaxation over `K` experts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoLevelRelaxation {
    pub prior: Distribution,
    pub ladder: RadiusLadder,
    pub horizon: usize,
    #[serde(default)]
    pub lambda_mode: LambdaMode,
}

/// Slack allowed when testing `KL(f | π) ≤ R_i` for a ladder rung.
const RUNG_SLACK: f64 = 1e-9;

impl TwoLevelRelaxation {
    pub fn new(
        prior: Distribution,
        ladder: RadiusLadder,
        horizon: usize,
        lambda_mode: LambdaMode,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        Ok(Self {
            prior,
            ladder,
            horizon,
            lambda_mode,
        })
    }

    /// `min_{i : KL(f|π) ≤ R_i} 3√(n R_i)`, `+inf` beyond the last rung.
    pub fn ladder_rate(&self, comparator: &Distribution) -> Result<f64> {
        let kl = kl_divergence(comparator, &self.prior)?;
        let n = self.horizon as f64;
        Ok(self
            .ladder
            .rung_covering(kl - RUNG_SLACK)
            .map(|i| 3.0 * (n * self.ladder.radius(i)).sqrt())
            .unwrap_or(f64::INFINITY))
    }
}

impl Relaxation for TwoLevelRelaxation {
    type State = TwoLevelState;

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn num_decisions(&self) -> usize {
        self.prior.support_size()
    }

    fn initial_state(&self) -> Result<TwoLevelState> {
        TwoLevelState::new(
            self.prior.clone(),
            self.ladder,
            self.horizon,
            self.lambda_mode,
        )
    }

    fn advance(&self, state: &TwoLevelState, y: &[f64]) -> Result<TwoLevelState> {
        state.advanced(y)
    }

    fn value(&self, state: &TwoLevelState) -> f64 {
        state.relaxation()
    }

    fn strategy(&self, state: &TwoLevelState) -> Result<Distribution> {
        state.predict()
    }

    fn target_rate(&self, comparator: &Distribution, _outcomes: &[Vec<f64>]) -> Result<f64> {
        self.ladder_rate(comparator)
    }

    fn candidate_comparators(&self, cumulative_losses: &[f64]) -> Result<Vec<Distribution>> {
        self.ladder
            .radii()
            .into_iter()
            .map(|r| kl_ball_minimizer(&self.prior, r, cumulative_losses).map(|(f, _)| f))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_rate_picks_smallest_covering_rung() {
        let r = TwoLevelRelaxation::new(
            Distribution::uniform(4).unwrap(),
            RadiusLadder::new(3).unwrap(),
            16,
            LambdaMode::Optimized,
        )
        .unwrap();
        assert_eq!(
            r.ladder_rate(&Distribution::uniform(4).unwrap()).unwrap(),
            12.0
        );
        // KL of a point mass is log 4 ≈ 1.386, covered by R = 2.
        let e = Distribution::point_mass(4, 0).unwrap();
        assert_eq!(r.ladder_rate(&e).unwrap(), 3.0 * 32f64.sqrt());
        let narrow = TwoLevelRelaxation::new(
            Distribution::uniform(4).unwrap(),
            RadiusLadder::new(1).unwrap(),
            16,
            LambdaMode::Optimized,
        )
        .unwrap();
        assert_eq!(narrow.ladder_rate(&e).unwrap(), f64::INFINITY);
    }
}

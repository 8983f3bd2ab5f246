//! Finite online games, comparators and play histories.

use serde::{Deserialize, Serialize};

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::numeric::dot;

/// Declared range of every loss entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossRange {
    #[default]
    UnitInterval,
    Symmetric,
}

impl LossRange {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            LossRange::UnitInterval => (0.0, 1.0),
            LossRange::Symmetric => (-1.0, 1.0),
        }
    }

    pub fn contains(self, x: f64) -> bool {
        let (lo, hi) = self.bounds();
        x >= lo && x <= hi
    }
}

/// A point the learner competes against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    /// A single expert (decision) index.
    Expert(usize),
    /// A mixture over experts.
    Mixture(Distribution),
    /// A point of a norm ball, for linear games over vectors.
    Point(Vec<f64>),
}

impl Comparator {
    /// Comparator as a distribution over `k` decisions, if it is one.
    pub fn as_distribution(&self, k: usize) -> Result<Distribution> {
        match self {
            Comparator::Expert(i) => Distribution::point_mass(k, *i),
            Comparator::Mixture(d) if d.support_size() == k => Ok(d.clone()),
            Comparator::Mixture(d) => Err(Error::DimensionMismatch {
                expected: k,
                found: d.support_size(),
            }),
            Comparator::Point(_) => Err(Error::Incompatible(
                "norm-ball comparator has no distribution over decisions".into(),
            )),
        }
    }
}

/// A finite online game. Loss is indexed `loss[decision][outcome]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    /// Decision labels.
    pub decisions: Vec<String>,
    /// Outcome vectors; for experts games the per-expert loss vector.
    pub outcomes: Vec<Vec<f64>>,
    /// Loss of each decision against each outcome.
    pub loss: Vec<Vec<f64>>,
    #[serde(default)]
    pub loss_range: LossRange,
    /// Comparators the regret is measured against.
    pub comparators: Vec<Comparator>,
    /// Number of rounds.
    pub horizon: usize,
}

impl GameSpec {
    pub fn new(
        decisions: Vec<String>,
        outcomes: Vec<Vec<f64>>,
        loss: Vec<Vec<f64>>,
        loss_range: LossRange,
        comparators: Vec<Comparator>,
        horizon: usize,
    ) -> Result<Self> {
        let game = Self {
            decisions,
            outcomes,
            loss,
            loss_range,
            comparators,
            horizon,
        };
        game.validate()?;
        Ok(game)
    }

    /// Experts game: decision `i` suffers coordinate `i` of the outcome vector.
    pub fn experts(
        outcomes: Vec<Vec<f64>>,
        comparators: Vec<Comparator>,
        horizon: usize,
    ) -> Result<Self> {
        let k = outcomes.first().map(Vec::len).unwrap_or(0);
        let loss = (0..k)
            .map(|i| {
                outcomes
                    .iter()
                    .map(|y| y.get(i).copied().unwrap_or(f64::NAN))
                    .collect()
            })
            .collect();
        Self::new(
            (0..k).map(|i| format!("expert{i}")).collect(),
            outcomes,
            loss,
            LossRange::UnitInterval,
            comparators,
            horizon,
        )
    }

    /// Experts game whose outcomes are all `2^k` binary loss vectors.
    pub fn binary_experts(k: usize, comparators: Vec<Comparator>, horizon: usize) -> Result<Self> {
        if k == 0 || k > 16 {
            return Err(Error::invalid(format!(
                "binary experts game needs 1 ≤ K ≤ 16, got {k}"
            )));
        }
        let outcomes = (0..1usize << k)
            .map(|mask| (0..k).map(|i| ((mask >> i) & 1) as f64).collect())
            .collect();
        Self::experts(outcomes, comparators, horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        if self.decisions.is_empty() || self.outcomes.is_empty() {
            return Err(Error::invalid(
                "decision and outcome sets must be non-empty",
            ));
        }
        if self.comparators.is_empty() {
            return Err(Error::invalid("comparator grid must be non-empty"));
        }
        if self.loss.len() != self.decisions.len() {
            return Err(Error::DimensionMismatch {
                expected: self.decisions.len(),
                found: self.loss.len(),
            });
        }
        for row in &self.loss {
            if row.len() != self.outcomes.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.outcomes.len(),
                    found: row.len(),
                });
            }
            if let Some(x) = row.iter().find(|x| !self.loss_range.contains(**x)) {
                return Err(Error::invalid(format!(
                    "loss entry {x} outside declared range {:?}",
                    self.loss_range
                )));
            }
        }
        for c in &self.comparators {
            match c {
                Comparator::Expert(i) if *i >= self.decisions.len() => {
                    return Err(Error::IndexOutOfRange {
                        what: "comparator expert",
                        index: *i,
                        size: self.decisions.len(),
                    })
                }
                Comparator::Mixture(d) if d.support_size() != self.decisions.len() => {
                    return Err(Error::DimensionMismatch {
                        expected: self.decisions.len(),
                        found: d.support_size(),
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn num_decisions(&self) -> usize {
        self.decisions.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    /// Loss column for outcome `y` (one entry per decision).
    pub fn loss_column(&self, y: usize) -> Result<Vec<f64>> {
        if y >= self.num_outcomes() {
            return Err(Error::IndexOutOfRange {
                what: "outcome",
                index: y,
                size: self.num_outcomes(),
            });
        }
        Ok(self.loss.iter().map(|row| row[y]).collect())
    }

    /// `|Y|^n`, saturating.
    pub fn sequence_count(&self) -> u128 {
        (self.num_outcomes() as u128).saturating_pow(self.horizon as u32)
    }
}

/// `E_{d∼q} ℓ(d, y)`.
pub fn expected_loss(q: &Distribution, y_index: usize, game: &GameSpec) -> Result<f64> {
    if q.support_size() != game.num_decisions() {
        return Err(Error::DimensionMismatch {
            expected: game.num_decisions(),
            found: q.support_size(),
        });
    }
    let column = game.loss_column(y_index)?;
    let (lo, hi) = game.loss_range.bounds();
    Ok(dot(q.weights(), &column).clamp(lo, hi))
}

/// Record of a play-out. All lists share one length.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    /// Outcome index per round.
    pub outcomes: Vec<usize>,
    /// Side information per round; empty for linear games.
    pub inputs: Vec<Vec<f64>>,
    /// Learner distribution per round.
    pub predictions: Vec<Distribution>,
    /// Expected loss of the prediction per round.
    pub realized_losses: Vec<f64>,
}

impl History {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn push(&mut self, outcome: usize, prediction: Distribution, loss: f64) {
        self.outcomes.push(outcome);
        self.predictions.push(prediction);
        self.realized_losses.push(loss);
    }
}

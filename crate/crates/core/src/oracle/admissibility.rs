//! Initial and recursive conditions of a relaxation, and play-out certificates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::minimax::{resolve_grid, ComparatorView};
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::game::{expected_loss, GameSpec};
use crate::numeric::compensated_sum;
use crate::relaxation::Relaxation;
use crate::rng::RngSpec;

/// Largest number of full sequences checked exhaustively.
pub const EXHAUSTIVE_BUDGET: u128 = 100_000;
/// Default tolerance on margins.
pub const ADMISSIBILITY_TOLERANCE: f64 = 1e-6;

/// How prefixes are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckMode {
    Exhaustive,
    /// Draws `count` full sequences; checks the recursive condition at one
    /// uniformly chosen prefix of each and the initial condition at its end.
    Sampled {
        count: usize,
        rng: RngSpec,
    },
}

/// Margin at one prefix (outcome indices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixMargin {
    pub prefix: Vec<usize>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// `Rel(prefix) − max_y [E_q ℓ(·, y) + Rel(prefix ∘ y)]`.
    pub recursive: Vec<PrefixMargin>,
    /// `Rel(y_{1:n}) + min_f [Σ_t ℓ(f, y_t) + B(f)]`.
    pub initial: Vec<PrefixMargin>,
    pub worst_margin: f64,
    pub worst_prefix: Vec<usize>,
    pub tolerance: f64,
    pub pass: bool,
}

struct Checker<'a, R: Relaxation> {
    relax: &'a R,
    game: &'a GameSpec,
    grid: Vec<ComparatorView>,
}

impl<'a, R: Relaxation> Checker<'a, R> {
    fn new(relax: &'a R, game: &'a GameSpec) -> Result<Self> {
        game.validate()?;
        if relax.num_decisions() != game.num_decisions() {
            return Err(Error::Incompatible(format!(
                "relaxation plays over {} decisions, game has {}",
                relax.num_decisions(),
                game.num_decisions()
            )));
        }
        if relax.horizon() != game.horizon {
            return Err(Error::Incompatible(format!(
                "relaxation horizon {} differs from game horizon {}",
                relax.horizon(),
                game.horizon
            )));
        }
        Ok(Self {
            relax,
            game,
            grid: resolve_grid(game)?,
        })
    }

    fn recursive_margin(&self, state: &R::State) -> Result<f64> {
        let q = self.relax.strategy(state)?;
        let mut worst = f64::NEG_INFINITY;
        for y in 0..self.game.num_outcomes() {
            let child = self.relax.advance(state, &self.game.outcomes[y])?;
            worst = worst.max(expected_loss(&q, y, self.game)? + self.relax.value(&child));
        }
        Ok(self.relax.value(state) - worst)
    }

    /// `min_f [Σ ℓ(f, y_t) + B(f)]` over the game grid plus the relaxation's candidates.
    fn comparator_infimum(&self, seq: &[usize]) -> Result<f64> {
        let outcomes: Vec<Vec<f64>> = seq.iter().map(|&y| self.game.outcomes[y].clone()).collect();
        let totals: Vec<f64> = (0..self.game.num_decisions())
            .map(|d| compensated_sum(seq.iter().map(|&y| self.game.loss[d][y])))
            .collect();
        let mut best = f64::INFINITY;
        let extra: Vec<ComparatorView> = self
            .relax
            .candidate_comparators(&totals)?
            .iter()
            .map(|f| ComparatorView::from_distribution(self.game, f))
            .collect();
        for v in self.grid.iter().chain(&extra) {
            let f = Distribution::new(v.weights.clone())?;
            let b = self.relax.target_rate(&f, &outcomes)?;
            let loss = compensated_sum(seq.iter().map(|&y| v.loss_by_outcome[y]));
            best = best.min(loss + b);
        }
        Ok(best)
    }

    fn initial_margin(&self, state: &R::State, seq: &[usize]) -> Result<f64> {
        Ok(self.relax.value(state) + self.comparator_infimum(seq)?)
    }

    fn walk(
        &self,
        state: &R::State,
        prefix: &mut Vec<usize>,
        out: &mut (Vec<PrefixMargin>, Vec<PrefixMargin>),
    ) -> Result<()> {
        if prefix.len() == self.game.horizon {
            out.1.push(PrefixMargin {
                prefix: prefix.clone(),
                margin: self.initial_margin(state, prefix)?,
            });
            return Ok(());
        }
        out.0.push(PrefixMargin {
            prefix: prefix.clone(),
            margin: self.recursive_margin(state)?,
        });
        for y in 0..self.game.num_outcomes() {
            let child = self.relax.advance(state, &self.game.outcomes[y])?;
            prefix.push(y);
            let r = self.walk(&child, prefix, out);
            prefix.pop();
            r?;
        }
        Ok(())
    }
}

fn summarize(
    recursive: Vec<PrefixMargin>,
    initial: Vec<PrefixMargin>,
    tol: f64,
) -> AdmissibilityReport {
    let worst = recursive
        .iter()
        .chain(&initial)
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
        .cloned()
        .unwrap_or(PrefixMargin {
            prefix: Vec::new(),
            margin: f64::INFINITY,
        });
    AdmissibilityReport {
        pass: worst.margin >= -tol,
        worst_margin: worst.margin,
        worst_prefix: worst.prefix,
        recursive,
        initial,
        tolerance: tol,
    }
}

/// Checks both relaxation conditions on all or sampled prefixes.
pub fn admissibility_check<R: Relaxation>(
    relax: &R,
    game: &GameSpec,
    mode: &CheckMode,
    tol: f64,
) -> Result<AdmissibilityReport> {
    let checker = Checker::new(relax, game)?;
    let root = relax.initial_state()?;
    match mode {
        CheckMode::Exhaustive => {
            let required = game.sequence_count();
            if required > EXHAUSTIVE_BUDGET {
                return Err(Error::BudgetExceeded {
                    required,
                    budget: EXHAUSTIVE_BUDGET,
                });
            }
            let mut out = (Vec::new(), Vec::new());
            checker.walk(&root, &mut Vec::new(), &mut out)?;
            Ok(summarize(out.0, out.1, tol))
        }
        CheckMode::Sampled { count, rng } => {
            let mut recursive = Vec::with_capacity(*count);
            let mut initial = Vec::with_capacity(*count);
            for r in 0..*count as u64 {
                let mut g = rng.stream(r)?;
                let seq: Vec<usize> = (0..game.horizon)
                    .map(|_| g.random_range(0..game.num_outcomes()))
                    .collect();
                let cut = g.random_range(0..game.horizon);
                let mut state = root.clone();
                for (t, &y) in seq.iter().enumerate() {
                    if t == cut {
                        recursive.push(PrefixMargin {
                            prefix: seq[..t].to_vec(),
                            margin: checker.recursive_margin(&state)?,
                        });
                    }
                    state = relax.advance(&state, &game.outcomes[y])?;
                }
                initial.push(PrefixMargin {
                    prefix: seq.clone(),
                    margin: checker.initial_margin(&state, &seq)?,
                });
            }
            Ok(summarize(recursive, initial, tol))
        }
    }
}

/// Play-out of the relaxation's strategy against a fixed sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// `Σ_t E_q ℓ(·, y_t) − min_f [Σ_t ℓ(f, y_t) + B(f)]`.
    pub lhs: f64,
    /// Relaxation value at the empty prefix.
    pub relaxation_value: f64,
    /// `relaxation_value − lhs`.
    pub margin: f64,
    pub learner_loss: f64,
}

pub fn regret_certificate<R: Relaxation>(
    relax: &R,
    game: &GameSpec,
    seq: &[usize],
) -> Result<CertificateReport> {
    let checker = Checker::new(relax, game)?;
    if seq.len() != game.horizon {
        return Err(Error::DimensionMismatch {
            expected: game.horizon,
            found: seq.len(),
        });
    }
    let mut state = relax.initial_state()?;
    let start = relax.value(&state);
    let mut losses = Vec::with_capacity(seq.len());
    for &y in seq {
        if y >= game.num_outcomes() {
            return Err(Error::IndexOutOfRange {
                what: "outcome",
                index: y,
                size: game.num_outcomes(),
            });
        }
        let q = relax.strategy(&state)?;
        losses.push(expected_loss(&q, y, game)?);
        state = relax.advance(&state, &game.outcomes[y])?;
    }
    let learner_loss = compensated_sum(losses);
    let lhs = learner_loss - checker.comparator_infimum(seq)?;
    Ok(CertificateReport {
        lhs,
        relaxation_value: start,
        margin: start - lhs,
        learner_loss,
    })
}

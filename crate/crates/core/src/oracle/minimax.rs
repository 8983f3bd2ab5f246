//! Offset minimax value of a finite game by backward induction over outcome histories.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lp::matrix_game_value;
use crate::algorithms::kl_ball_minimizer;
use crate::bounds::{AdaptiveRate, RateInput};
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::game::{Comparator, GameSpec};

/// Largest number of full outcome sequences the induction will visit.
pub const SEQUENCE_BUDGET: u128 = 1_000_000;
/// Default tolerance of [`achievability_check`].
pub const ACHIEVABILITY_TOLERANCE: f64 = 1e-7;

/// Comparator as the weight vector the rates see, with its per-outcome loss.
pub(crate) struct ComparatorView {
    pub weights: Vec<f64>,
    /// `ℓ(f, y)` for every outcome index.
    pub loss_by_outcome: Vec<f64>,
}

impl ComparatorView {
    pub fn from_distribution(game: &GameSpec, f: &Distribution) -> Self {
        let loss_by_outcome = (0..game.num_outcomes())
            .map(|y| {
                game.loss
                    .iter()
                    .zip(f.weights())
                    .map(|(row, w)| w * row[y])
                    .sum()
            })
            .collect();
        Self {
            weights: f.weights().to_vec(),
            loss_by_outcome,
        }
    }

    pub fn from_comparator(game: &GameSpec, c: &Comparator) -> Result<Self> {
        match c {
            Comparator::Point(p) => {
                let loss_by_outcome = game
                    .outcomes
                    .iter()
                    .map(|y| {
                        if y.len() != p.len() {
                            Err(Error::DimensionMismatch {
                                expected: y.len(),
                                found: p.len(),
                            })
                        } else {
                            Ok(p.iter().zip(y).map(|(a, b)| a * b).sum())
                        }
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok(Self {
                    weights: p.clone(),
                    loss_by_outcome,
                })
            }
            other => Ok(Self::from_distribution(
                game,
                &other.as_distribution(game.num_decisions())?,
            )),
        }
    }
}

/// Comparator grid of a game, resolved once.
pub(crate) fn resolve_grid(game: &GameSpec) -> Result<Vec<ComparatorView>> {
    game.comparators
        .iter()
        .map(|c| ComparatorView::from_comparator(game, c))
        .collect()
}

/// Prior of a KL-type rate, which enables the continuous refinement.
fn refinement_prior(rate: &AdaptiveRate) -> Option<&Distribution> {
    match rate {
        AdaptiveRate::PacBayes { prior } | AdaptiveRate::KlRadius { prior } => Some(prior),
        AdaptiveRate::GenericRadius {
            prior: Some(prior), ..
        } => Some(prior),
        _ => None,
    }
}

/// Radii `{0} ∪ {2^j}` spanning the prior's largest possible KL.
pub(crate) fn refinement_radii(prior: &Distribution) -> Vec<f64> {
    let min_mass = prior
        .weights()
        .iter()
        .copied()
        .filter(|w| *w > 0.0)
        .fold(1.0, f64::min);
    let top = (-min_mass.ln()).max(1.0).log2().ceil() as i32 + 1;
    std::iter::once(0.0)
        .chain((-10..=top).map(|j| 2f64.powi(j)))
        .collect()
}

/// `min_f [Σ_t ℓ(f, y_t) + B(f; y)]` over a set of comparators.
fn comparator_infimum(
    views: &[ComparatorView],
    rate: &AdaptiveRate,
    seq: &[usize],
    outcomes: &[Vec<f64>],
) -> Result<f64> {
    let mut best = f64::INFINITY;
    for v in views {
        let losses: Vec<f64> = seq.iter().map(|&y| v.loss_by_outcome[y]).collect();
        let b = rate.evaluate(&RateInput {
            comparator: &v.weights,
            outcomes,
            comparator_losses: &losses,
        })?;
        best = best.min(losses.iter().sum::<f64>() + b);
    }
    Ok(best)
}

/// Leaf values: grid-only and refined with KL-ball minimizers.
fn leaf_values(
    game: &GameSpec,
    rate: &AdaptiveRate,
    grid: &[ComparatorView],
    seq: &[usize],
) -> Result<(f64, f64)> {
    let outcomes: Vec<Vec<f64>> = seq.iter().map(|&y| game.outcomes[y].clone()).collect();
    let grid_inf = comparator_infimum(grid, rate, seq, &outcomes)?;
    let refined_inf = match refinement_prior(rate) {
        Some(prior) if prior.support_size() == game.num_decisions() => {
            let totals: Vec<f64> = (0..game.num_decisions())
                .map(|d| seq.iter().map(|&y| game.loss[d][y]).sum())
                .collect();
            let extra = refinement_radii(prior)
                .into_iter()
                .map(|r| {
                    kl_ball_minimizer(prior, r, &totals)
                        .map(|(f, _)| ComparatorView::from_distribution(game, &f))
                })
                .collect::<Result<Vec<_>>>()?;
            grid_inf.min(comparator_infimum(&extra, rate, seq, &outcomes)?)
        }
        _ => grid_inf,
    };
    Ok((-grid_inf, -refined_inf))
}

/// Result of backward induction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxReport {
    /// Value with the comparator infimum over the game's grid only.
    pub value_grid: f64,
    /// Value with the grid refined by KL-ball minimizers (equals `value_grid` for other rates).
    pub value_refined: f64,
    /// Outcome indices following the maximizer's most likely reply (refined game).
    pub argmax_path: Vec<usize>,
    /// Interior nodes solved.
    pub interior_nodes: usize,
}

struct NodeResult {
    grid: f64,
    refined: f64,
    path: Vec<usize>,
    nodes: usize,
}

fn solve_node(
    game: &GameSpec,
    rate: &AdaptiveRate,
    grid: &[ComparatorView],
    prefix: &mut Vec<usize>,
) -> Result<NodeResult> {
    if prefix.len() == game.horizon {
        let (g, r) = leaf_values(game, rate, grid, prefix)?;
        return Ok(NodeResult {
            grid: g,
            refined: r,
            path: Vec::new(),
            nodes: 0,
        });
    }
    let children: Vec<NodeResult> = if prefix.is_empty() && game.horizon > 1 {
        (0..game.num_outcomes())
            .into_par_iter()
            .map(|y| solve_node(game, rate, grid, &mut vec![y]))
            .collect::<Result<_>>()?
    } else {
        let mut out = Vec::with_capacity(game.num_outcomes());
        for y in 0..game.num_outcomes() {
            prefix.push(y);
            let child = solve_node(game, rate, grid, prefix);
            prefix.pop();
            out.push(child?);
        }
        out
    };
    combine(game, children)
}

fn combine(game: &GameSpec, children: Vec<NodeResult>) -> Result<NodeResult> {
    let matrix = |pick: &dyn Fn(&NodeResult) -> f64| -> Vec<Vec<f64>> {
        game.loss
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&children)
                    .map(|(l, c)| l + pick(c))
                    .collect()
            })
            .collect()
    };
    let grid_sol = matrix_game_value(&matrix(&|c| c.grid))?;
    let refined_sol = matrix_game_value(&matrix(&|c| c.refined))?;
    let best_y = refined_sol
        .col
        .weights()
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |acc, (y, &w)| {
            if w > acc.1 {
                (y, w)
            } else {
                acc
            }
        })
        .0;
    let nodes = 1 + children.iter().map(|c| c.nodes).sum::<usize>();
    let mut children = children;
    let mut path = vec![best_y];
    path.append(&mut children[best_y].path);
    Ok(NodeResult {
        grid: grid_sol.value,
        refined: refined_sol.value,
        path,
        nodes,
    })
}

/// Offset minimax value with its grid-only variant and an argmax trace.
pub fn offset_minimax_report(game: &GameSpec, rate: &AdaptiveRate) -> Result<MinimaxReport> {
    game.validate()?;
    let required = game.sequence_count();
    if required > SEQUENCE_BUDGET {
        return Err(Error::BudgetExceeded {
            required,
            budget: SEQUENCE_BUDGET,
        });
    }
    let grid = resolve_grid(game)?;
    let root = solve_node(game, rate, &grid, &mut Vec::new())?;
    Ok(MinimaxReport {
        value_grid: root.grid,
        value_refined: root.refined,
        argmax_path: root.path,
        interior_nodes: root.nodes,
    })
}

/// Offset minimax value (refined comparator infimum).
pub fn offset_minimax_value(game: &GameSpec, rate: &AdaptiveRate) -> Result<f64> {
    Ok(offset_minimax_report(game, rate)?.value_refined)
}

/// Achievability verdict: the rate is achievable iff the value is at most `tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AchievabilityVerdict {
    pub achievable: bool,
    pub value: f64,
    pub value_grid: f64,
    pub tolerance: f64,
    pub argmax_path: Vec<usize>,
}

pub fn achievability_check(
    game: &GameSpec,
    rate: &AdaptiveRate,
    tol: f64,
) -> Result<AchievabilityVerdict> {
    let report = offset_minimax_report(game, rate)?;
    Ok(AchievabilityVerdict {
        achievable: report.value_refined <= tol,
        value: report.value_refined,
        value_grid: report.value_grid,
        tolerance: tol,
        argmax_path: report.argmax_path,
    })
}

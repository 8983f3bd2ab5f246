//! One-sided tail validators for martingale and Rademacher-type processes.
//!
//! Each validator computes a per-path statistic on every sign path (or on
//! sampled paths), estimates the probability of the tail event at each
//! requested level and compares it with the closed-form bound. Only upper-tail
//! violations fail.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::maximal::MC_MARGIN_STDERRS;
use crate::bounds::UNIT_BALL_SLACK;
use crate::complexity::{
    dudley_integral_exact, CoverNorm, CoverProfile, EstimationMode, FunctionTable,
};
use crate::complexity::{EXACT_DEPTH_CAP, MIN_REPLICATES};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::tree::{path_node_indices, path_sign, BinaryTree};

/// Slack on exact-enumeration comparisons (pure rounding).
const EXACT_SLACK: f64 = 1e-12;

/// Which inequality an instance exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    /// `P(‖Σ ε_t z_t(ε)‖ ≥ τ) ≤ 2 exp(−τ²/8D²n)` in Euclidean space (`D = 1`),
    /// valid when `n > τ/4D²`.
    Pinelis,
    /// `P(sup_g |Σ ε_t g| > n inf_α {4α + 6θ ∫_α^1 √log N∞(δ) dδ}) ≤ 2Γ e^{−nθ²/4}`
    /// for `θ > √(12/n)`.
    Chaining,
    /// Offset process with quadratic offset `2α g²` and entropy corrections,
    /// bounded by `Γ exp(−τ²/2σ²) + exp(−ατ/2)`.
    OffsetProcess,
}

impl TailKind {
    pub const NAMES: [&'static str; 3] = ["pinelis", "chaining", "offset_process"];

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "pinelis" => Ok(Self::Pinelis),
            "chaining" => Ok(Self::Chaining),
            "offset_process" => Ok(Self::OffsetProcess),
            other => Err(Error::UnknownName {
                kind: "tail kind",
                name: other.to_string(),
                known: Self::NAMES.join(", "),
            }),
        }
    }
}

fn default_gamma() -> f64 {
    1.0
}

/// Tree or class on which a tail inequality is checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailInstance {
    /// Vector-valued tree inside the Euclidean unit ball.
    Pinelis { tree: BinaryTree },
    /// Finite class on a tree; levels are `θ` values.
    Chaining { table: FunctionTable },
    /// Finite class on a tree with offset weight `α` and scale `γ ≥ 1/n`.
    OffsetProcess {
        table: FunctionTable,
        alpha: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
}

impl TailInstance {
    pub fn kind(&self) -> TailKind {
        match self {
            Self::Pinelis { .. } => TailKind::Pinelis,
            Self::Chaining { .. } => TailKind::Chaining,
            Self::OffsetProcess { .. } => TailKind::OffsetProcess,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Self::Pinelis { tree } => tree.depth(),
            Self::Chaining { table } | Self::OffsetProcess { table, .. } => table.depth(),
        }
    }
}

/// Comparison at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    /// Requested `τ` (or `θ` for chaining).
    pub level: f64,
    /// Value the statistic is compared against.
    pub cutoff: f64,
    pub empirical: f64,
    /// Binomial standard error; zero under exact enumeration.
    pub stderr: f64,
    pub bound: f64,
    /// Why the point was not tested, if it was not.
    pub skipped: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub kind: TailKind,
    pub exact: bool,
    /// Paths enumerated or sampled.
    pub samples: usize,
    /// Whether every cover used was provably minimal.
    pub covers_exact: bool,
    pub points: Vec<TailPoint>,
    /// All tested points pass.
    pub pass: bool,
}

/// Per-path statistic and, for each level, its cutoff, bound and skip reason.
struct Prepared {
    stat: Box<dyn Fn(usize) -> f64 + Sync>,
    /// `(cutoff, bound, strict, skip)`; strict events use `>`, others `≥`.
    levels: Vec<(f64, f64, bool, Option<String>)>,
    covers_exact: bool,
}

fn prepare(instance: &TailInstance, levels: &[f64]) -> Result<Prepared> {
    if let Some(x) = levels.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::invalid(format!(
            "tail levels must be finite and positive, got {x}"
        )));
    }
    match instance {
        TailInstance::Pinelis { tree } => {
            for (i, z) in tree.nodes().iter().enumerate() {
                let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm.is_nan() || norm > 1.0 + UNIT_BALL_SLACK {
                    return Err(Error::OutsideUnitBall { round: i, norm });
                }
            }
            let n = tree.depth();
            let nf = n as f64;
            let tree = tree.clone();
            let stat = move |code: usize| {
                let idx = path_node_indices(n, code);
                let dim = tree.nodes()[0].len();
                let mut acc = vec![0.0; dim];
                for (t, &i) in idx.iter().enumerate() {
                    let s = path_sign(code, t);
                    for (a, z) in acc.iter_mut().zip(&tree.nodes()[i]) {
                        *a += s * z;
                    }
                }
                acc.iter().map(|x| x * x).sum::<f64>().sqrt()
            };
            let levels = levels
                .iter()
                .map(|&tau| {
                    let skip = (nf <= tau / 4.0)
                        .then(|| format!("requires n > τ/4, got n = {n}, τ = {tau}"));
                    (tau, 2.0 * (-tau * tau / (8.0 * nf)).exp(), false, skip)
                })
                .collect();
            Ok(Prepared {
                stat: Box::new(stat),
                levels,
                covers_exact: true,
            })
        }
        TailInstance::Chaining { table } => {
            let n = table.depth();
            let nf = n as f64;
            let profile = CoverProfile::build(table, CoverNorm::Linf)?;
            let gamma = chaining_gamma(&profile, n);
            let table = table.clone();
            let stat = move |code: usize| {
                table
                    .path_values(code)
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .map(|(t, g)| path_sign(code, t) * g)
                            .sum::<f64>()
                            .abs()
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let floor = (12.0 / nf).sqrt();
            let levels = levels
                .iter()
                .map(|&theta| {
                    let skip = (theta <= floor).then(|| format!("requires θ > √(12/n) = {floor}"));
                    let cutoff = nf * chaining_scale(&profile, theta);
                    (
                        cutoff,
                        2.0 * gamma * (-nf * theta * theta / 4.0).exp(),
                        true,
                        skip,
                    )
                })
                .collect();
            Ok(Prepared {
                stat: Box::new(stat),
                levels,
                covers_exact: profile.exact,
            })
        }
        TailInstance::OffsetProcess {
            table,
            alpha,
            gamma,
        } => {
            let n = table.depth();
            let nf = n as f64;
            if !(alpha.is_finite() && *alpha > 0.0) {
                return Err(Error::invalid(format!(
                    "offset weight α must be positive, got {alpha}"
                )));
            }
            if !(gamma.is_finite() && *gamma >= 1.0 / nf) {
                return Err(Error::invalid(format!(
                    "scale γ must be at least 1/n, got {gamma}"
                )));
            }
            let (alpha, gamma) = (*alpha, *gamma);
            let profile = CoverProfile::build(table, CoverNorm::L2)?;
            let integral = dudley_integral_exact(&profile, gamma, n);
            let sigma = 12.0 * integral;
            let correction = profile.log_size_at(gamma) / alpha
                + 12.0 * std::f64::consts::SQRT_2 * integral
                + 1.0;
            let big_gamma = offset_gamma(&profile, gamma, n);
            let table = table.clone();
            let stat = move |code: usize| {
                table
                    .path_values(code)
                    .iter()
                    .map(|row| {
                        compensated_sum(
                            row.iter()
                                .enumerate()
                                .map(|(t, g)| path_sign(code, t) * g - 2.0 * alpha * g * g),
                        )
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
                    - correction
            };
            let levels = levels
                .iter()
                .map(|&tau| {
                    let gauss = if sigma > 0.0 {
                        big_gamma * (-tau * tau / (2.0 * sigma * sigma)).exp()
                    } else {
                        0.0
                    };
                    (tau, gauss + (-alpha * tau / 2.0).exp(), true, None)
                })
                .collect();
            Ok(Prepared {
                stat: Box::new(stat),
                levels,
                covers_exact: profile.exact,
            })
        }
    }
}

/// `Σ_{j=1}^{J} N∞(2^{−j})^{−1}` plus the last term again for the truncated tail,
/// with `J = ⌈log2 n⌉ + 4`.
pub fn chaining_gamma(profile: &CoverProfile, n: usize) -> f64 {
    let top = (n as f64).log2().ceil() as i32 + 4;
    let terms: Vec<f64> = (1..=top)
        .map(|j| 1.0 / profile.size_at(2f64.powi(-j)) as f64)
        .collect();
    compensated_sum(terms.iter().copied()) + terms.last().copied().unwrap_or(0.0)
}

/// `inf_{α ∈ (0, 1]} {4α + 6θ ∫_α^1 √log N∞(δ) dδ}`; the objective is piecewise
/// linear in `α`, so the infimum sits at `0⁺`, a cover breakpoint or `1`.
pub fn chaining_scale(profile: &CoverProfile, theta: f64) -> f64 {
    let f = |a: f64| 4.0 * a + 6.0 * theta * profile.integrate(a, 1.0, |l| l.max(0.0).sqrt());
    profile
        .steps()
        .iter()
        .map(|s| s.0)
        .filter(|&a| a > 0.0 && a < 1.0)
        .chain([0.0, 1.0])
        .map(f)
        .fold(f64::INFINITY, f64::min)
}

/// `Σ_{j=1}^{⌊log2 2nγ⌋} N₂(2^{−j} γ)^{−2}`.
pub fn offset_gamma(profile: &CoverProfile, gamma: f64, n: usize) -> f64 {
    let top = (2.0 * n as f64 * gamma).log2().floor() as i32;
    compensated_sum((1..=top).map(|j| {
        let size = profile.size_at(2f64.powi(-j) * gamma) as f64;
        1.0 / (size * size)
    }))
}

/// Estimates the tail probability at each level and compares it with the bound.
pub fn tail_validate(
    instance: &TailInstance,
    levels: &[f64],
    mode: &EstimationMode,
) -> Result<TailReport> {
    let prepared = prepare(instance, levels)?;
    let n = instance.depth();
    let (stats, exact): (Vec<f64>, bool) = match mode {
        EstimationMode::Exact => {
            if n > EXACT_DEPTH_CAP {
                return Err(Error::DepthTooLarge {
                    depth: n,
                    cap: EXACT_DEPTH_CAP,
                });
            }
            (
                (0..1usize << n)
                    .into_par_iter()
                    .map(|c| (prepared.stat)(c))
                    .collect(),
                true,
            )
        }
        EstimationMode::MonteCarlo { replicates, rng } => {
            if *replicates < MIN_REPLICATES {
                return Err(Error::invalid(format!(
                    "Monte Carlo needs at least {MIN_REPLICATES} replicates, got {replicates}"
                )));
            }
            rng.validate()?;
            let stats = (0..*replicates as u64)
                .into_par_iter()
                .map(|r| {
                    let mut g = rng.stream(r).expect("validated");
                    let code = (0..n).fold(0usize, |acc, t| {
                        acc | (usize::from(g.random::<bool>()) << t)
                    });
                    (prepared.stat)(code)
                })
                .collect();
            (stats, false)
        }
    };
    let m = stats.len() as f64;
    let points: Vec<TailPoint> = levels
        .iter()
        .zip(prepared.levels)
        .map(|(&level, (cutoff, bound, strict, skipped))| {
            let hits = stats
                .iter()
                .filter(|&&x| if strict { x > cutoff } else { x >= cutoff })
                .count() as f64;
            let p = hits / m;
            let stderr = if exact {
                0.0
            } else {
                (p * (1.0 - p) / m).sqrt()
            };
            let margin = if exact {
                EXACT_SLACK
            } else {
                MC_MARGIN_STDERRS * stderr
            };
            let pass = skipped.is_some() || p <= bound + margin;
            TailPoint {
                level,
                cutoff,
                empirical: p,
                stderr,
                bound,
                skipped,
                pass,
            }
        })
        .collect();
    Ok(TailReport {
        kind: instance.kind(),
        exact,
        samples: stats.len(),
        covers_exact: prepared.covers_exact,
        pass: points.iter().all(|p| p.pass),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pinelis_constant_tree_matches_binomial() {
        let tree = BinaryTree::constant(10, vec![1.0, 0.0, 0.0]).unwrap();
        let inst = TailInstance::Pinelis { tree };
        let rep = tail_validate(&inst, &[5.0], &EstimationMode::Exact).unwrap();
        // Oracle: |Σε| ≥ 5 with n = 10 means |2k − 10| ≥ 6, i.e. k ≤ 2 or k ≥ 8.
        let binom = |k: u64| (1..=k).fold(1u64, |acc, i| acc * (10 - i + 1) / i);
        let hits: u64 = [0, 1, 2, 8, 9, 10].iter().map(|&k| binom(k)).sum();
        assert_eq!(rep.points[0].empirical, hits as f64 / 1024.0);
        assert!((rep.points[0].bound - 2.0 * (-25.0f64 / 80.0).exp()).abs() < 1e-15);
        assert!(rep.pass);
    }

    #[test]
    fn pinelis_skips_outside_regime() {
        let tree = BinaryTree::constant(2, vec![1.0]).unwrap();
        let rep = tail_validate(
            &TailInstance::Pinelis { tree },
            &[8.0],
            &EstimationMode::Exact,
        )
        .unwrap();
        assert!(rep.points[0].skipped.is_some());
        let outside = BinaryTree::constant(2, vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            tail_validate(
                &TailInstance::Pinelis { tree: outside },
                &[1.0],
                &EstimationMode::Exact
            ),
            Err(Error::OutsideUnitBall { .. })
        ));
    }

    #[test]
    fn offset_singleton_with_heavy_offset_never_fires() {
        let table =
            FunctionTable::from_levels(&[vec![1.0, -1.0, 1.0, 1.0, -1.0, 1.0]], 1.0).unwrap();
        let inst = TailInstance::OffsetProcess {
            table,
            alpha: 10.0,
            gamma: 1.0,
        };
        let rep = tail_validate(&inst, &[0.1, 1.0, 3.0], &EstimationMode::Exact).unwrap();
        assert!(rep.points.iter().all(|p| p.empirical == 0.0 && p.pass));
    }

    #[test]
    fn chaining_four_functions_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let table = FunctionTable::random(&mut rng, 4, 10, 1.0).unwrap();
        let floor = (12.0f64 / 10.0).sqrt();
        let thetas: Vec<f64> = (1..=5).map(|k| floor * (1.0 + 0.25 * k as f64)).collect();
        let rep = tail_validate(
            &TailInstance::Chaining { table },
            &thetas,
            &EstimationMode::Exact,
        )
        .unwrap();
        assert!(rep.pass && rep.points.iter().all(|p| p.skipped.is_none()));
    }

    #[test]
    fn chaining_scale_singleton_is_zero() {
        let table = FunctionTable::from_levels(&[vec![0.5; 4]], 1.0).unwrap();
        let p = CoverProfile::build(&table, CoverNorm::Linf).unwrap();
        assert_eq!(chaining_scale(&p, 2.0), 0.0);
        // N∞ ≡ 1 at every dyadic scale: J = 2 + 4 terms of 1, plus one.
        assert_eq!(chaining_gamma(&p, 4), 7.0);
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let tree =
            BinaryTree::from_fn(8, |t, _| vec![if t % 2 == 0 { 0.6 } else { -0.8 }, 0.0]).unwrap();
        let inst = TailInstance::Pinelis { tree };
        let exact = tail_validate(&inst, &[2.0, 3.0], &EstimationMode::Exact).unwrap();
        let mc = tail_validate(
            &inst,
            &[2.0, 3.0],
            &EstimationMode::MonteCarlo {
                replicates: 20_000,
                rng: RngSpec::new(4),
            },
        )
        .unwrap();
        for (e, m) in exact.points.iter().zip(&mc.points) {
            assert!((e.empirical - m.empirical).abs() <= 4.0 * m.stderr + 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive_levels() {
        let tree = BinaryTree::constant(3, vec![0.5]).unwrap();
        assert!(tail_validate(
            &TailInstance::Pinelis { tree },
            &[0.0],
            &EstimationMode::Exact
        )
        .is_err());
    }
}

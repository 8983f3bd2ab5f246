//! Oblivious loss sequences for experts games: each round is a vector of
//! per-expert losses in `[0, 1]`.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Registered environment names.
pub const ENVIRONMENT_NAMES: [&str; 5] = [
    "stochastic_bernoulli",
    "small_loss_leader",
    "quantile_block",
    "alternating_adversary",
    "file",
];

fn half() -> f64 {
    0.5
}
fn leader_rate() -> f64 {
    0.05
}
fn eighth() -> f64 {
    0.125
}
fn good_rate() -> f64 {
    0.2
}
fn bad_rate() -> f64 {
    0.6
}

/// Environment generator and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    /// Independent Bernoulli(p) losses for every expert and round.
    StochasticBernoulli {
        experts: usize,
        #[serde(default = "half")]
        p: f64,
    },
    /// One expert with a small loss rate among experts with a larger one.
    SmallLossLeader {
        experts: usize,
        #[serde(default)]
        leader: usize,
        #[serde(default = "leader_rate")]
        leader_rate: f64,
        #[serde(default = "half")]
        others_rate: f64,
    },
    /// A block of `round(K · good_fraction)` experts shares one loss sequence
    /// and ties for the smallest cumulative loss; every other expert is
    /// charged at least as much each round and strictly more in round one.
    QuantileBlock {
        experts: usize,
        #[serde(default = "eighth")]
        good_fraction: f64,
        #[serde(default = "good_rate")]
        good_rate: f64,
        #[serde(default = "bad_rate")]
        bad_rate: f64,
    },
    /// Deterministic: expert `i` suffers loss 1 in round `t` iff `i + t` is even.
    AlternatingAdversary { experts: usize },
    /// JSON array of per-round loss vectors; the first `n` rounds are used.
    File { path: PathBuf },
}

fn check_prob(what: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{what} must lie in [0, 1], got {p}"
        )))
    }
}

fn check_experts(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::invalid("environment needs at least one expert"))
    } else {
        Ok(())
    }
}

fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> f64 {
    if rng.random::<f64>() < p {
        1.0
    } else {
        0.0
    }
}

impl EnvironmentSpec {
    /// Parses a JSON description, reporting unknown generator names with the registry.
    pub fn from_json(value: serde_json::Value) -> Result<Self> {
        if let Some(name) = value.get("name").and_then(|v| v.as_str()) {
            if !ENVIRONMENT_NAMES.contains(&name) {
                return Err(Error::UnknownName {
                    kind: "environment",
                    name: name.to_string(),
                    known: ENVIRONMENT_NAMES.join(", "),
                });
            }
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::StochasticBernoulli { .. } => "stochastic_bernoulli",
            Self::SmallLossLeader { .. } => "small_loss_leader",
            Self::QuantileBlock { .. } => "quantile_block",
            Self::AlternatingAdversary { .. } => "alternating_adversary",
            Self::File { .. } => "file",
        }
    }

    /// Resolves a relative file path against `base`.
    pub fn rebased(self, base: &Path) -> Self {
        match self {
            Self::File { path } if path.is_relative() => Self::File {
                path: base.join(path),
            },
            other => other,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::StochasticBernoulli { experts, p } => {
                check_experts(*experts)?;
                check_prob("p", *p)
            }
            Self::SmallLossLeader {
                experts,
                leader,
                leader_rate,
                others_rate,
            } => {
                check_experts(*experts)?;
                if leader >= experts {
                    return Err(Error::IndexOutOfRange {
                        what: "leader",
                        index: *leader,
                        size: *experts,
                    });
                }
                check_prob("leader_rate", *leader_rate)?;
                check_prob("others_rate", *others_rate)
            }
            Self::QuantileBlock {
                experts,
                good_fraction,
                good_rate,
                bad_rate,
            } => {
                check_experts(*experts)?;
                if !(*good_fraction > 0.0 && *good_fraction <= 1.0) {
                    return Err(Error::invalid(format!(
                        "good_fraction must lie in (0, 1], got {good_fraction}"
                    )));
                }
                if quantile_block_size(*experts, *good_fraction) == 0 {
                    return Err(Error::invalid("good block is empty"));
                }
                check_prob("good_rate", *good_rate)?;
                check_prob("bad_rate", *bad_rate)
            }
            Self::AlternatingAdversary { experts } => check_experts(*experts),
            Self::File { .. } => Ok(()),
        }
    }
}

/// Number of experts in the good block.
pub fn quantile_block_size(experts: usize, good_fraction: f64) -> usize {
    ((experts as f64) * good_fraction).round() as usize
}

fn read_file(path: &Path, n: usize) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text)?;
    if rows.len() < n {
        return Err(Error::invalid(format!(
            "{} holds {} rounds, horizon is {n}",
            path.display(),
            rows.len()
        )));
    }
    let rows: Vec<Vec<f64>> = rows.into_iter().take(n).collect();
    let k = rows.first().map(Vec::len).unwrap_or(0);
    check_experts(k)?;
    for (t, row) in rows.iter().enumerate() {
        if row.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: row.len(),
            });
        }
        if let Some(x) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::invalid(format!(
                "round {} loss {x} outside [0, 1]",
                t + 1
            )));
        }
    }
    Ok(rows)
}

/// Draws `n` rounds from the environment. Deterministic given the generator state.
pub fn generate_environment(
    spec: &EnvironmentSpec,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::invalid("horizon must be positive"));
    }
    let rows = match spec {
        EnvironmentSpec::StochasticBernoulli { experts, p } => (0..n)
            .map(|_| (0..*experts).map(|_| bernoulli(rng, *p)).collect())
            .collect(),
        EnvironmentSpec::SmallLossLeader {
            experts,
            leader,
            leader_rate,
            others_rate,
        } => (0..n)
            .map(|_| {
                (0..*experts)
                    .map(|i| {
                        bernoulli(
                            rng,
                            if i == *leader {
                                *leader_rate
                            } else {
                                *others_rate
                            },
                        )
                    })
                    .collect()
            })
            .collect(),
        EnvironmentSpec::QuantileBlock {
            experts,
            good_fraction,
            good_rate,
            bad_rate,
        } => {
            let m = quantile_block_size(*experts, *good_fraction);
            (0..n)
                .map(|t| {
                    let good = if t == 0 {
                        0.0
                    } else {
                        bernoulli(rng, *good_rate)
                    };
                    (0..*experts)
                        .map(|i| {
                            let extra = bernoulli(rng, *bad_rate);
                            match (i < m, t) {
                                (true, _) => good,
                                (false, 0) => 1.0,
                                (false, _) => f64::max(good, extra),
                            }
                        })
                        .collect()
                })
                .collect()
        }
        EnvironmentSpec::AlternatingAdversary { experts } => (0..n)
            .map(|t| {
                (0..*experts)
                    .map(|i| if (i + t) % 2 == 0 { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect(),
        EnvironmentSpec::File { path } => read_file(path, n)?,
    };
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(17)
    }

    fn column_totals(rows: &[Vec<f64>]) -> Vec<f64> {
        (0..rows[0].len())
            .map(|i| rows.iter().map(|r| r[i]).sum())
            .collect()
    }

    #[test]
    fn zero_rate_leader_has_zero_column() {
        let spec = EnvironmentSpec::SmallLossLeader {
            experts: 4,
            leader: 2,
            leader_rate: 0.0,
            others_rate: 0.5,
        };
        let rows = generate_environment(&spec, 100, &mut rng()).unwrap();
        assert!(rows.iter().all(|r| r[2] == 0.0));
    }

    #[test]
    fn quantile_block_ties_exactly() {
        let spec = EnvironmentSpec::QuantileBlock {
            experts: 64,
            good_fraction: 0.125,
            good_rate: 0.2,
            bad_rate: 0.6,
        };
        let rows = generate_environment(&spec, 50, &mut rng()).unwrap();
        let totals = column_totals(&rows);
        let best = totals.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(totals.iter().filter(|&&x| x == best).count(), 8);
    }

    #[test]
    fn bernoulli_mean_concentrates() {
        let n = 4000;
        let spec = EnvironmentSpec::StochasticBernoulli { experts: 1, p: 0.5 };
        let rows = generate_environment(&spec, n, &mut rng()).unwrap();
        let mean = rows.iter().map(|r| r[0]).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() <= 4.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn alternating_pattern() {
        let rows = generate_environment(
            &EnvironmentSpec::AlternatingAdversary { experts: 2 },
            3,
            &mut rng(),
        )
        .unwrap();
        assert_eq!(rows, vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn unknown_name_lists_registry() {
        let err = EnvironmentSpec::from_json(serde_json::json!({"name": "bursty", "experts": 2}))
            .unwrap_err();
        match err {
            Error::UnknownName { known, .. } => assert!(known.contains("quantile_block")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = EnvironmentSpec::StochasticBernoulli { experts: 3, p: 0.3 };
        let a = generate_environment(&spec, 20, &mut rng()).unwrap();
        let b = generate_environment(&spec, 20, &mut rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn file_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("losses.json");
        std::fs::write(&path, "[[0.0, 1.0], [0.5, 0.25], [1.0, 0.0]]").unwrap();
        let spec = EnvironmentSpec::File { path: path.clone() };
        let rows = generate_environment(&spec, 2, &mut rng()).unwrap();
        assert_eq!(rows, vec![vec![0.0, 1.0], vec![0.5, 0.25]]);
        assert!(generate_environment(&spec, 4, &mut rng()).is_err());
        let missing = EnvironmentSpec::File {
            path: dir.path().join("absent.json"),
        };
        assert!(matches!(
            generate_environment(&missing, 1, &mut rng()),
            Err(Error::Io { .. })
        ));
    }
}

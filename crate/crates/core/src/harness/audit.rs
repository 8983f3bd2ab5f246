//! Simulation loop and per-comparator regret audit.
//!
//! Every audited quantity is rounded to a multiple of `2^-32` before the slack
//! is formed, so `regret + slack = rate + certificate` holds exactly in
//! floating point for magnitudes below `2^20`.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AuditRate, ExperimentConfig, GridSpec};
use super::environment::generate_environment;
use super::nonfinite;
use crate::algorithms::kl_ball_minimizer;
use crate::bounds::RateInput;
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, dot, quantize};
use crate::relaxation::{Relaxation, TwoLevelRelaxation};

/// Schema version written into reports.
pub const REPORT_VERSION: u32 = 1;
/// Allowed slack deficit per round.
pub const SLACK_TOLERANCE_PER_ROUND: f64 = 1e-6;

/// Learner loss in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    /// Expected loss of the played mixture.
    pub loss: f64,
    /// Loss of a sampled action, when sampling was requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled_loss: Option<f64>,
}

/// Audit of one comparator under one rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparatorAudit {
    pub comparator_id: String,
    pub regret: f64,
    #[serde(with = "nonfinite")]
    pub rate: f64,
    /// `rate + certificate − regret`.
    #[serde(with = "nonfinite")]
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateAudit {
    pub rate: String,
    pub rows: Vec<ComparatorAudit>,
    #[serde(with = "nonfinite")]
    pub min_slack: f64,
    pub argmin_comparator: String,
}

/// One replicate's play-out and audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub replicate: usize,
    /// Seed of this replicate's stream.
    pub seed: u64,
    pub environment: String,
    pub strategy: String,
    pub rounds: Vec<RoundRecord>,
    pub learner_loss: f64,
    /// Relaxation value at the empty prefix.
    pub certificate: f64,
    pub rates: Vec<RateAudit>,
}

/// Worst row across all records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(with = "nonfinite")]
    pub min_slack: f64,
    pub worst_replicate: usize,
    pub worst_rate: String,
    pub worst_comparator: String,
    /// `−1e-6 · n`.
    pub tolerance: f64,
    pub identity_holds: bool,
    pub pass: bool,
}

/// Everything written for one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub report_version: u32,
    pub crate_version: String,
    pub config: ExperimentConfig,
    pub records: Vec<AuditRecord>,
    pub summary: Summary,
}

/// A comparator on the audit grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub id: String,
    pub weights: Distribution,
}

/// Number of compositions of `r` into `k` nonnegative parts, saturating.
fn composition_count(r: usize, k: usize) -> u128 {
    // C(r + k − 1, k − 1), built incrementally so each step stays integral.
    let mut c: u128 = 1;
    for j in 1..k as u128 {
        c = c.saturating_mul(r as u128 + j) / j;
        if c > u64::MAX as u128 {
            return u128::MAX;
        }
    }
    c
}

fn push_compositions(r: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() + 1 == k {
        let used: usize = prefix.iter().sum();
        prefix.push(r - used);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    let used: usize = prefix.iter().sum();
    for c in 0..=(r - used) {
        prefix.push(c);
        push_compositions(r, k, prefix, out);
        prefix.pop();
    }
}

/// Uniform random composition via stars and bars.
fn random_composition(r: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let slots = r + k - 1;
    let mut bars = sample(rng, slots, k - 1).into_vec();
    bars.sort_unstable();
    let mut parts = Vec::with_capacity(k);
    let mut prev = 0usize;
    for (j, &b) in bars.iter().enumerate() {
        parts.push(b - prev - usize::from(j > 0));
        prev = b;
    }
    parts.push(slots - prev - usize::from(!bars.is_empty()));
    parts
}

/// Point masses plus the simplex grid at step `1/resolution` (sampled when too large).
pub fn base_grid(k: usize, grid: &GridSpec, rng: &mut ChaCha8Rng) -> Result<Vec<GridPoint>> {
    let mut points: Vec<GridPoint> = (0..k)
        .map(|i| {
            Ok(GridPoint {
                id: format!("e{i}"),
                weights: Distribution::point_mass(k, i)?,
            })
        })
        .collect::<Result<_>>()?;
    if k == 1 {
        return Ok(points);
    }
    let r = grid.resolution;
    let comps: Vec<Vec<usize>> = if composition_count(r, k) <= grid.max_points as u128 {
        let mut out = Vec::new();
        push_compositions(r, k, &mut Vec::with_capacity(k), &mut out);
        out
    } else {
        (0..grid.max_points)
            .map(|_| random_composition(r, k, rng))
            .collect()
    };
    for (j, c) in comps.into_iter().enumerate() {
        if c.iter().filter(|&&x| x > 0).count() <= 1 {
            continue;
        }
        let w: Vec<f64> = c.iter().map(|&x| x as f64 / r as f64).collect();
        points.push(GridPoint {
            id: format!("g{j}"),
            weights: Distribution::from_unnormalized(w)?,
        });
    }
    Ok(points)
}

/// Uniform mixtures over the `m` best experts (`m = 1, 2, 4, …, K`) and KL-ball
/// minimizers at each ladder radius, for the final cumulative losses.
pub fn refinement_points(relax: &TwoLevelRelaxation, totals: &[f64]) -> Result<Vec<GridPoint>> {
    let k = totals.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| totals[a].total_cmp(&totals[b]).then(a.cmp(&b)));
    let mut sizes: Vec<usize> = std::iter::successors(Some(1usize), |m| Some(m * 2))
        .take_while(|&m| m < k)
        .collect();
    sizes.push(k);
    let mut out = Vec::new();
    for m in sizes {
        let mut w = vec![0.0; k];
        for &i in &order[..m] {
            w[i] = 1.0 / m as f64;
        }
        out.push(GridPoint {
            id: format!("top{m}"),
            weights: Distribution::from_unnormalized(w)?,
        });
    }
    for (i, r) in relax.ladder.radii().into_iter().enumerate() {
        let (f, _) = kl_ball_minimizer(&relax.prior, r, totals)?;
        out.push(GridPoint {
            id: format!("kl{}", i + 1),
            weights: f,
        });
    }
    Ok(out)
}

fn evaluate_rate(
    rate: &AuditRate,
    relax: &TwoLevelRelaxation,
    f: &Distribution,
    ys: &[Vec<f64>],
    per_round: &[f64],
) -> Result<f64> {
    match rate {
        AuditRate::Ladder => relax.ladder_rate(f),
        AuditRate::Adaptive(r) => r.evaluate(&RateInput {
            comparator: f.weights(),
            outcomes: ys,
            comparator_losses: per_round,
        }),
    }
}

/// Audits every comparator under every rate.
pub fn audit_play(
    relax: &TwoLevelRelaxation,
    rates: &[AuditRate],
    ys: &[Vec<f64>],
    learner_loss: f64,
    certificate: f64,
    grid: &[GridPoint],
) -> Result<Vec<RateAudit>> {
    let cert = quantize(certificate);
    let per_point: Vec<(f64, Vec<f64>)> = grid
        .iter()
        .map(|p| {
            let per_round: Vec<f64> = ys.iter().map(|y| dot(p.weights.weights(), y)).collect();
            (
                quantize(learner_loss - compensated_sum(per_round.iter().copied())),
                per_round,
            )
        })
        .collect();
    rates
        .iter()
        .map(|rate| {
            let rows = grid
                .iter()
                .zip(&per_point)
                .map(|(p, (regret, per_round))| {
                    let value = quantize(evaluate_rate(rate, relax, &p.weights, ys, per_round)?);
                    Ok(ComparatorAudit {
                        comparator_id: p.id.clone(),
                        regret: *regret,
                        rate: value,
                        slack: (value + cert) - regret,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let worst = rows
                .iter()
                .min_by(|a, b| a.slack.total_cmp(&b.slack))
                .expect("grid holds at least one point");
            Ok(RateAudit {
                rate: rate.label().to_string(),
                min_slack: worst.slack,
                argmin_comparator: worst.comparator_id.clone(),
                rows,
            })
        })
        .collect()
}

/// Plays the relaxation's strategy on `ys`; returns per-round records, total loss and the certificate.
pub fn play(
    relax: &TwoLevelRelaxation,
    ys: &[Vec<f64>],
    mut sampler: Option<&mut ChaCha8Rng>,
) -> Result<(Vec<RoundRecord>, f64, f64)> {
    let mut state = relax.initial_state()?;
    let certificate = relax.value(&state);
    let mut rounds = Vec::with_capacity(ys.len());
    for (t, y) in ys.iter().enumerate() {
        let q = relax.strategy(&state)?;
        let loss = dot(q.weights(), y);
        let sampled_loss = sampler.as_deref_mut().map(|g| {
            let u: f64 = g.random();
            let mut acc = 0.0;
            let mut pick = q.support_size() - 1;
            for (i, w) in q.weights().iter().enumerate() {
                acc += w;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            y[pick]
        });
        rounds.push(RoundRecord {
            round: t + 1,
            loss,
            sampled_loss,
        });
        state = relax.advance(&state, y)?;
    }
    let total = compensated_sum(rounds.iter().map(|r| r.loss));
    Ok((rounds, total, certificate))
}

fn run_replicate(
    cfg: &ExperimentConfig,
    relax: &TwoLevelRelaxation,
    rates: &[AuditRate],
    grid: &[GridPoint],
    replicate: usize,
) -> Result<AuditRecord> {
    let mut rng = cfg.rng.stream(replicate as u64)?;
    let ys = generate_environment(&cfg.environment, cfg.horizon, &mut rng)?;
    if ys[0].len() != relax.prior.support_size() {
        return Err(Error::DimensionMismatch {
            expected: relax.prior.support_size(),
            found: ys[0].len(),
        });
    }
    let mut sampler = cfg.sample_predictions.then(|| {
        let mut g = rng.clone();
        g.set_stream(2);
        g
    });
    let (rounds, learner_loss, certificate) = play(relax, &ys, sampler.as_mut())?;
    let mut points = grid.to_vec();
    if cfg.grid.refinements {
        let k = ys[0].len();
        let totals: Vec<f64> = (0..k)
            .map(|i| compensated_sum(ys.iter().map(|y| y[i])))
            .collect();
        points.extend(refinement_points(relax, &totals)?);
    }
    let rates = audit_play(relax, rates, &ys, learner_loss, certificate, &points)?;
    Ok(AuditRecord {
        replicate,
        seed: cfg.rng.seed.wrapping_add(replicate as u64),
        environment: cfg.environment.name().to_string(),
        strategy: cfg.strategy.name.clone(),
        rounds,
        learner_loss,
        certificate,
        rates,
    })
}

/// Number of experts the environment produces.
fn experts_of(cfg: &ExperimentConfig) -> Result<usize> {
    use super::environment::EnvironmentSpec as E;
    Ok(match &cfg.environment {
        E::StochasticBernoulli { experts, .. }
        | E::SmallLossLeader { experts, .. }
        | E::QuantileBlock { experts, .. }
        | E::AlternatingAdversary { experts } => *experts,
        E::File { .. } => {
            let mut rng = cfg.rng.stream(0)?;
            generate_environment(&cfg.environment, cfg.horizon, &mut rng)?[0].len()
        }
    })
}

fn summarize(records: &[AuditRecord], n: usize) -> Summary {
    let tolerance = -SLACK_TOLERANCE_PER_ROUND * n as f64;
    let mut summary = Summary {
        min_slack: f64::INFINITY,
        worst_replicate: 0,
        worst_rate: String::new(),
        worst_comparator: String::new(),
        tolerance,
        identity_holds: true,
        pass: true,
    };
    for rec in records {
        let cert = quantize(rec.certificate);
        for ra in &rec.rates {
            for row in &ra.rows {
                if row.regret + row.slack != row.rate + cert {
                    summary.identity_holds = false;
                }
            }
            if ra.min_slack < summary.min_slack {
                summary.min_slack = ra.min_slack;
                summary.worst_replicate = rec.replicate;
                summary.worst_rate = ra.rate.clone();
                summary.worst_comparator = ra.argmin_comparator.clone();
            }
        }
    }
    summary.pass = summary.identity_holds && summary.min_slack >= tolerance;
    summary
}

/// Runs every replicate, audits it and assembles the report in replicate order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let k = experts_of(cfg)?;
    let relax = cfg.strategy.relaxation(k, cfg.horizon)?;
    let rates = cfg
        .rates
        .iter()
        .map(|r| r.resolve(k, &relax.prior))
        .collect::<Result<Vec<_>>>()?;
    let mut grid_rng = cfg.rng.stream(0)?;
    grid_rng.set_stream(1);
    let grid = base_grid(k, &cfg.grid, &mut grid_rng)?;
    let records = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(cfg, &relax, &rates, &grid, r))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&records, cfg.horizon);
    Ok(ExperimentReport {
        report_version: REPORT_VERSION,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        records,
        summary,
    })
}

/// Re-check of a stored report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditVerdict {
    pub rows_checked: usize,
    pub identity_violations: usize,
    /// Rate audits whose stored minimum disagrees with their rows.
    pub summary_mismatches: usize,
    #[serde(with = "nonfinite")]
    pub min_slack: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Verifies the slack identity row by row and recomputes the worst slack.
/// `tolerance` defaults to `−1e-6 · n`.
pub fn audit_report(report: &ExperimentReport, tolerance: Option<f64>) -> AuditVerdict {
    let tolerance = tolerance.unwrap_or(-SLACK_TOLERANCE_PER_ROUND * report.config.horizon as f64);
    let mut verdict = AuditVerdict {
        rows_checked: 0,
        identity_violations: 0,
        summary_mismatches: 0,
        min_slack: f64::INFINITY,
        tolerance,
        pass: false,
    };
    for rec in &report.records {
        let cert = quantize(rec.certificate);
        for ra in &rec.rates {
            let mut local = f64::INFINITY;
            for row in &ra.rows {
                verdict.rows_checked += 1;
                if row.regret + row.slack != row.rate + cert
                    || row.slack != (row.rate + cert) - row.regret
                {
                    verdict.identity_violations += 1;
                }
                local = local.min(row.slack);
            }
            if local != ra.min_slack {
                verdict.summary_mismatches += 1;
            }
            verdict.min_slack = verdict.min_slack.min(local);
        }
    }
    verdict.pass = verdict.identity_violations == 0
        && verdict.summary_mismatches == 0
        && verdict.min_slack >= tolerance;
    verdict
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{RateRef, StrategySpec};
    use crate::harness::environment::EnvironmentSpec;
    use crate::rng::RngSpec;
    use rand::SeedableRng;

    fn config(env: EnvironmentSpec, n: usize, rates: &[&str]) -> ExperimentConfig {
        ExperimentConfig {
            version: 1,
            environment: env,
            strategy: StrategySpec::default(),
            rates: rates
                .iter()
                .map(|r| RateRef::Named(r.to_string()))
                .collect(),
            horizon: n,
            replicates: 2,
            rng: RngSpec::new(11),
            grid: GridSpec::default(),
            sample_predictions: false,
            output: Default::default(),
        }
    }

    #[test]
    fn composition_counts() {
        assert_eq!(composition_count(16, 2), 17);
        assert_eq!(composition_count(16, 3), 153);
        let mut out = Vec::new();
        push_compositions(4, 3, &mut Vec::new(), &mut out);
        assert_eq!(out.len() as u128, composition_count(4, 3));
        assert!(out.iter().all(|c| c.iter().sum::<usize>() == 4));
        assert_eq!(composition_count(64, 64), u128::MAX);
    }

    #[test]
    fn random_compositions_sum_to_resolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for k in 2..6 {
            for _ in 0..50 {
                let c = random_composition(16, k, &mut rng);
                assert_eq!(c.len(), k);
                assert_eq!(c.iter().sum::<usize>(), 16);
            }
        }
    }

    #[test]
    fn small_loss_leader_audit_nonnegative() {
        let env = EnvironmentSpec::SmallLossLeader {
            experts: 8,
            leader: 3,
            leader_rate: 0.05,
            others_rate: 0.5,
        };
        let rep = run_experiment(&config(env, 256, &["kl_radius", "ladder"])).unwrap();
        assert!(rep.summary.pass, "{:?}", rep.summary);
        assert!(rep.summary.identity_holds);
        for rec in &rep.records {
            for ra in &rec.rates {
                assert!(ra.min_slack >= 0.0);
            }
        }
    }

    #[test]
    fn quantile_pac_bayes_audit() {
        let env = EnvironmentSpec::QuantileBlock {
            experts: 16,
            good_fraction: 0.125,
            good_rate: 0.2,
            bad_rate: 0.6,
        };
        let rep = run_experiment(&config(env, 128, &["pac_bayes"])).unwrap();
        for rec in &rep.records {
            let rows = &rec.rates[0].rows;
            for m in ["top2", "top4", "top8"] {
                let row = rows.iter().find(|r| r.comparator_id == m).unwrap();
                assert!(row.slack >= 0.0, "{m}: {row:?}");
            }
        }
    }

    #[test]
    fn zero_loss_environment() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zeros.json");
        std::fs::write(
            &path,
            serde_json::to_string(&vec![vec![0.0; 3]; 10]).unwrap(),
        )
        .unwrap();
        let rep =
            run_experiment(&config(EnvironmentSpec::File { path }, 10, &["kl_radius"])).unwrap();
        for rec in &rep.records {
            for row in &rec.rates[0].rows {
                assert!(row.regret <= 0.0);
                assert!(row.slack >= row.rate && row.rate >= 0.0);
            }
        }
    }

    #[test]
    fn identical_configs_identical_reports() {
        let env = EnvironmentSpec::StochasticBernoulli { experts: 4, p: 0.4 };
        let mut cfg = config(env, 32, &["kl_radius", "pac_bayes", "ladder"]);
        cfg.sample_predictions = true;
        let a = serde_json::to_string(&run_experiment(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_experiment(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn audit_detects_tampering() {
        let env = EnvironmentSpec::AlternatingAdversary { experts: 2 };
        let mut rep = run_experiment(&config(env, 16, &["kl_radius"])).unwrap();
        assert!(audit_report(&rep, None).pass);
        rep.records[0].rates[0].rows[0].slack += 0.5;
        let v = audit_report(&rep, None);
        assert!(!v.pass && v.identity_violations == 1);
    }
}

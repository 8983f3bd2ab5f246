//! Experiment pipeline: config files, play-out, audit, output and re-audit.

use std::path::Path;

use regretlab::harness::{
    audit_report, emit_results, generate_environment, quantile_block_size, read_report,
    rounds_path, run_experiment, EnvironmentSpec, ExperimentConfig, OutputFormat,
    ENVIRONMENT_NAMES,
};
use regretlab::{kl_divergence, Distribution, Error, RngSpec};

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn config_file_to_verified_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write(
        dir.path(),
        "exp.json",
        r#"{
            "version": 1,
            "environment": {"name": "quantile_block", "experts": 8},
            "rates": ["kl_radius", "pac_bayes", "ladder"],
            "horizon": 64,
            "replicates": 3,
            "rng": {"seed": 42}
        }"#,
    );
    let cfg = ExperimentConfig::load(&cfg_path).unwrap();
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.records.len(), 3);
    assert!(report.summary.pass && report.summary.identity_holds);
    for rec in &report.records {
        assert_eq!(rec.rounds.len(), 64);
        let labels: Vec<&str> = rec.rates.iter().map(|r| r.rate.as_str()).collect();
        assert_eq!(labels, ["kl_radius", "pac_bayes", "ladder"]);
        let total: f64 = rec.rounds.iter().map(|r| r.loss).sum();
        assert!((total - rec.learner_loss).abs() <= 1e-9);
    }
    let json = dir.path().join("out.json");
    emit_results(&report, OutputFormat::Json, &json).unwrap();
    let back = read_report(&json).unwrap();
    let verdict = audit_report(&back, None);
    assert!(verdict.pass);
    assert_eq!(verdict.identity_violations, 0);
    assert_eq!(verdict.min_slack, report.summary.min_slack);
}

#[test]
fn tampered_report_fails_reaudit() {
    let cfg = ExperimentConfig::from_json_str(
        r#"{"version": 1, "environment": {"name": "alternating_adversary", "experts": 2},
            "horizon": 16, "rng": {"seed": 1}}"#,
        None,
    )
    .unwrap();
    let mut report = run_experiment(&cfg).unwrap();
    assert!(audit_report(&report, None).pass);
    report.records[0].rates[0].rows[0].regret += 0.5;
    let verdict = audit_report(&report, None);
    assert!(!verdict.pass);
    assert_eq!(verdict.identity_violations, 1);
    // A demanding tolerance alone can also fail an honest report.
    let honest = run_experiment(&cfg).unwrap();
    assert!(!audit_report(&honest, Some(honest.summary.min_slack + 1.0)).pass);
}

#[test]
fn file_environment_resolves_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "losses.json",
        "[[1, 0, 0.5], [0, 1, 0.5], [1, 1, 0], [0, 0, 1]]",
    );
    let cfg_path = write(
        dir.path(),
        "exp.json",
        r#"{"version": 1, "environment": {"name": "file", "path": "losses.json"},
            "horizon": 3, "rng": {"seed": 0}}"#,
    );
    let cfg = ExperimentConfig::load(&cfg_path).unwrap();
    let mut g = cfg.rng.stream(0).unwrap();
    let ys = generate_environment(&cfg.environment, 3, &mut g).unwrap();
    assert_eq!(
        ys,
        vec![
            vec![1.0, 0.0, 0.5],
            vec![0.0, 1.0, 0.5],
            vec![1.0, 1.0, 0.0]
        ]
    );
    let report = run_experiment(&cfg).unwrap();
    assert!(report.summary.pass);
    let short = ExperimentConfig { horizon: 5, ..cfg };
    assert!(run_experiment(&short).is_err());
}

#[test]
fn unknown_environment_lists_registry() {
    let err = ExperimentConfig::from_json_str(
        r#"{"version": 1, "environment": {"name": "bandit", "experts": 2}, "horizon": 4, "rng": {"seed": 0}}"#,
        None,
    )
    .unwrap_err();
    match err {
        Error::UnknownName { name, known, .. } => {
            assert_eq!(name, "bandit");
            for n in ENVIRONMENT_NAMES {
                assert!(known.contains(n));
            }
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn environments_stay_in_unit_cube_and_repeat_under_seed() {
    let specs = [
        EnvironmentSpec::StochasticBernoulli { experts: 5, p: 0.3 },
        EnvironmentSpec::SmallLossLeader {
            experts: 5,
            leader: 2,
            leader_rate: 0.05,
            others_rate: 0.5,
        },
        EnvironmentSpec::QuantileBlock {
            experts: 16,
            good_fraction: 0.125,
            good_rate: 0.2,
            bad_rate: 0.6,
        },
        EnvironmentSpec::AlternatingAdversary { experts: 5 },
    ];
    for spec in &specs {
        let draw = |seed| {
            generate_environment(spec, 200, &mut RngSpec::new(seed).stream(0).unwrap()).unwrap()
        };
        let ys = draw(9);
        assert_eq!(ys.len(), 200);
        assert!(ys.iter().flatten().all(|x| (0.0..=1.0).contains(x)));
        assert_eq!(ys, draw(9));
    }
}

#[test]
fn quantile_block_good_experts_beat_the_rest() {
    let k = 16;
    let spec = EnvironmentSpec::QuantileBlock {
        experts: k,
        good_fraction: 0.125,
        good_rate: 0.2,
        bad_rate: 0.6,
    };
    let block = quantile_block_size(k, 0.125);
    assert_eq!(block, 2);
    let ys = generate_environment(&spec, 128, &mut RngSpec::new(5).stream(0).unwrap()).unwrap();
    let totals: Vec<f64> = (0..k).map(|i| ys.iter().map(|y| y[i]).sum()).collect();
    assert!(totals[..block].iter().all(|t| *t == totals[0]));
    assert!(totals[block..].iter().all(|t| *t > totals[0]));
    // Uniform weight on the block sits at KL = log(K / block) from the uniform prior.
    let mix = Distribution::from_unnormalized(
        (0..k).map(|i| if i < block { 1.0 } else { 0.0 }).collect(),
    )
    .unwrap();
    let kl = kl_divergence(&mix, &Distribution::uniform(k).unwrap()).unwrap();
    assert!((kl - 8f64.ln()).abs() < 1e-12);
}

#[test]
fn csv_output_has_one_row_per_audit_entry() {
    let cfg = ExperimentConfig::from_json_str(
        r#"{"version": 1, "environment": {"name": "stochastic_bernoulli", "experts": 3},
            "horizon": 10, "replicates": 2, "rng": {"seed": 8}, "sample_predictions": true}"#,
        None,
    )
    .unwrap();
    let report = run_experiment(&cfg).unwrap();
    assert!(report
        .records
        .iter()
        .all(|r| r.rounds.iter().all(|x| x.sampled_loss.is_some())));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("audit.csv");
    emit_results(&report, OutputFormat::Csv, &path).unwrap();
    let audit = std::fs::read_to_string(&path).unwrap();
    let rows: usize = report
        .records
        .iter()
        .flat_map(|r| &r.rates)
        .map(|r| r.rows.len())
        .sum();
    assert_eq!(audit.lines().count(), rows + 1);
    let rounds = std::fs::read_to_string(rounds_path(&path)).unwrap();
    assert_eq!(rounds.lines().count(), 2 * 10 + 1);
}

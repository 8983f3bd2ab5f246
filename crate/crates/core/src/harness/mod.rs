//! Experiments: environment generators, the play-and-audit loop and result output.

mod audit;
mod config;
mod emit;
mod environment;
mod game_file;
mod nonfinite;

pub use audit::{
    audit_play, audit_report, base_grid, play, refinement_points, run_experiment, AuditRecord,
    AuditVerdict, ComparatorAudit, ExperimentReport, GridPoint, RateAudit, RoundRecord, Summary,
    REPORT_VERSION, SLACK_TOLERANCE_PER_ROUND,
};
pub use config::{
    resolve_rate_name, AuditRate, ExperimentConfig, GridSpec, OutputSpec, RateRef, StrategySpec,
    CONFIG_VERSION, LADDER_RATE, STRATEGY_NAMES,
};
pub use emit::{emit_results, read_report, report_json, rounds_path, OutputFormat};
pub use environment::{
    generate_environment, quantile_block_size, EnvironmentSpec, ENVIRONMENT_NAMES,
};
pub use game_file::{load_game, simplex_comparators, BinaryExpertsSpec, GameDescription};

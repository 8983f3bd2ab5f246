//! `lab`: run experiments, audit reports and certify rates from the command line.
//!
//! Every subcommand prints a JSON report on stdout (and to `--out` when given).
//! Exit status is 0 when every requested check passes, 1 when a check fails
//! and 2 on errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use regretlab::algorithms::LambdaMode;
use regretlab::bounds::AdaptiveRate;
use regretlab::complexity::{
    offset_expectation, seq_rademacher_exact, EstimationMode, FunctionTable, OffsetForm,
    EXACT_DEPTH_CAP,
};
use regretlab::harness::{
    audit_report, emit_results, load_game, read_report, report_json, resolve_rate_name,
    run_experiment, AuditRate, ExperimentConfig, OutputFormat, StrategySpec,
};
use regretlab::oracle::{
    achievability_check, admissibility_check, CheckMode, ACHIEVABILITY_TOLERANCE,
};
use regretlab::probtools::{
    maximal_inequality_mc, tail_validate, TailGenerator, TailInstance, TailKind, TailSpec,
};
use regretlab::{Distribution, RngSpec};

#[derive(Parser)]
#[command(
    name = "lab",
    version,
    about = "Adaptive regret experiments and certificates"
)]
struct Cli {
    /// Overrides the seed of any configuration or sampled mode.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also writes the JSON report to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LambdaArg {
    Optimized,
    Fixed,
}

impl From<LambdaArg> for LambdaMode {
    fn from(a: LambdaArg) -> Self {
        match a {
            LambdaArg::Optimized => LambdaMode::Optimized,
            LambdaArg::Fixed => LambdaMode::FixedInverseSqrtN,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    None,
    QuadraticAlpha,
    EntropyAdaptive,
    FiniteClass,
}

#[derive(Clone, Copy, ValueEnum)]
enum TailArg {
    Pinelis,
    Chaining,
    OffsetProcess,
    Maximal,
}

#[derive(Subcommand)]
enum Command {
    /// Plays a strategy against an environment and audits every comparator.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Writes the audit and round tables as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Re-checks a stored run report.
    Audit {
        #[arg(short, long)]
        report: PathBuf,
        /// Smallest acceptable slack; defaults to −1e-6·n.
        #[arg(long, allow_hyphen_values = true)]
        tolerance: Option<f64>,
    },
    /// Computes the offset minimax value of a game under a rate.
    Oracle {
        #[arg(short, long)]
        game: PathBuf,
        /// Registry name of the rate (defaults use a uniform prior).
        #[arg(long, conflicts_with = "rate_file")]
        rate: Option<String>,
        /// JSON file with a fully specified rate.
        #[arg(long)]
        rate_file: Option<PathBuf>,
        /// Value for `--rate uniform_constant`.
        #[arg(long, allow_hyphen_values = true)]
        value: Option<f64>,
        #[arg(long, default_value_t = ACHIEVABILITY_TOLERANCE)]
        tol: f64,
    },
    /// Checks the initial and recursive conditions of a strategy's relaxation.
    Admissible {
        #[arg(short, long)]
        game: PathBuf,
        #[arg(long, default_value = "two-level-ew")]
        strategy: String,
        #[arg(long)]
        i_max: Option<usize>,
        #[arg(long, value_enum, default_value = "optimized")]
        lambda_mode: LambdaArg,
        /// Samples this many sequences instead of enumerating all prefixes.
        #[arg(long)]
        sampled: Option<usize>,
        #[arg(long, default_value_t = regretlab::oracle::ADMISSIBILITY_TOLERANCE)]
        tol: f64,
    },
    /// Estimates the expected supremum of an offset Rademacher process.
    Complexity {
        /// JSON function table; a random table is drawn when absent.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        size: usize,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, value_enum, default_value = "none")]
        form: FormArg,
        #[arg(long)]
        alpha: Option<f64>,
        /// Monte Carlo replicates; exact enumeration when absent.
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Validates a one-sided tail bound or the maximal inequality.
    ValidateTails {
        #[arg(long, value_enum)]
        kind: TailArg,
        /// JSON instance (tree or table) for tail kinds.
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Comma-separated τ (or θ) levels.
        #[arg(long, value_delimiter = ',')]
        levels: Vec<f64>,
        /// JSON tail specification for `maximal`.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value = "shifted_gaussian")]
        generator: String,
        /// Monte Carlo replicates; exact enumeration when absent (tail kinds).
        #[arg(long)]
        replicates: Option<usize>,
    },
}

/// Report plus whether every check passed.
struct Outcome {
    report: Value,
    pass: bool,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn rng(seed: Option<u64>) -> RngSpec {
    RngSpec::new(seed.unwrap_or(0))
}

fn cmd_run(config: &Path, csv: Option<PathBuf>, seed: Option<u64>) -> Result<Outcome> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.rng.seed = s;
    }
    let report = run_experiment(&cfg)?;
    if let Some(path) = &cfg.output.json {
        emit_results(&report, OutputFormat::Json, path)?;
    }
    for path in cfg.output.csv.iter().chain(csv.as_ref()) {
        emit_results(&report, OutputFormat::Csv, path)?;
    }
    let pass = report.summary.pass;
    Ok(Outcome {
        report: serde_json::from_str(&report_json(&report)?)?,
        pass,
    })
}

fn cmd_audit(report: &Path, tolerance: Option<f64>) -> Result<Outcome> {
    let stored = read_report(report)?;
    let verdict = audit_report(&stored, tolerance);
    Ok(Outcome {
        pass: verdict.pass,
        report: to_value(&verdict)?,
    })
}

fn oracle_rate(
    rate: Option<String>,
    rate_file: Option<PathBuf>,
    value: Option<f64>,
    k: usize,
) -> Result<AdaptiveRate> {
    if let Some(path) = rate_file {
        return read_json(&path);
    }
    let Some(name) = rate else {
        bail!("give --rate or --rate-file");
    };
    if name == "uniform_constant" {
        let Some(value) = value else {
            bail!("--rate uniform_constant needs --value");
        };
        return Ok(AdaptiveRate::UniformConstant { value });
    }
    match resolve_rate_name(&name, k, &Distribution::uniform(k)?)? {
        AuditRate::Adaptive(r) => Ok(r),
        AuditRate::Ladder => bail!("the ladder rate belongs to a strategy; use `lab admissible`"),
    }
}

fn cmd_oracle(
    game: &Path,
    rate: Option<String>,
    rate_file: Option<PathBuf>,
    value: Option<f64>,
    tol: f64,
) -> Result<Outcome> {
    let game = load_game(game)?;
    let rate = oracle_rate(rate, rate_file, value, game.num_decisions())?;
    let verdict = achievability_check(&game, &rate, tol)?;
    Ok(Outcome {
        pass: verdict.achievable,
        report: json!({
            "rate": to_value(&rate)?,
            "horizon": game.horizon,
            "decisions": game.num_decisions(),
            "outcomes": game.num_outcomes(),
            "comparators": game.comparators.len(),
            "verdict": to_value(&verdict)?,
        }),
    })
}

fn cmd_admissible(
    game: &Path,
    strategy: String,
    i_max: Option<usize>,
    lambda_mode: LambdaArg,
    sampled: Option<usize>,
    tol: f64,
    seed: Option<u64>,
) -> Result<Outcome> {
    let game = load_game(game)?;
    let spec = StrategySpec {
        name: strategy,
        prior: None,
        i_max,
        lambda_mode: lambda_mode.into(),
    };
    let relax = spec.relaxation(game.num_decisions(), game.horizon)?;
    let mode = match sampled {
        Some(count) => CheckMode::Sampled {
            count,
            rng: rng(seed),
        },
        None => CheckMode::Exhaustive,
    };
    let report = admissibility_check(&relax, &game, &mode, tol)?;
    Ok(Outcome {
        pass: report.pass,
        report: json!({
            "strategy": to_value(&spec)?,
            "i_max": relax.ladder.i_max(),
            "mode": to_value(&mode)?,
            "worst_margin": report.worst_margin,
            "worst_prefix": report.worst_prefix,
            "tolerance": report.tolerance,
            "recursive_checked": report.recursive.len(),
            "initial_checked": report.initial.len(),
            "pass": report.pass,
            "margins": to_value(&report)?,
        }),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_complexity(
    table: Option<PathBuf>,
    size: usize,
    depth: usize,
    form: FormArg,
    alpha: Option<f64>,
    replicates: Option<usize>,
    seed: Option<u64>,
) -> Result<Outcome> {
    let table: FunctionTable = match table {
        Some(path) => read_json(&path)?,
        None => {
            let mut g = rng(seed).stream(0)?;
            FunctionTable::random(&mut g, size, depth, 1.0)?
        }
    };
    let form = match form {
        FormArg::None => OffsetForm::None,
        FormArg::QuadraticAlpha => OffsetForm::QuadraticAlpha {
            alpha: alpha.context("--form quadratic-alpha needs --alpha")?,
        },
        FormArg::EntropyAdaptive => OffsetForm::EntropyAdaptive,
        FormArg::FiniteClass => OffsetForm::FiniteClass,
    };
    let mode = match replicates {
        Some(r) => EstimationMode::MonteCarlo {
            replicates: r,
            rng: rng(seed),
        },
        None => EstimationMode::Exact,
    };
    let est = offset_expectation(&table, &form, &mode)?;
    let reference = form.reference_bound(table.depth());
    let pass = reference.is_none_or(|b| est.value <= b + 4.0 * est.stderr);
    let rademacher = if table.depth() <= EXACT_DEPTH_CAP {
        Some(seq_rademacher_exact(&table)?)
    } else {
        None
    };
    Ok(Outcome {
        pass,
        report: json!({
            "size": table.size(),
            "depth": table.depth(),
            "form": to_value(&form)?,
            "mode": to_value(&mode)?,
            "estimate": to_value(&est)?,
            "reference_bound": reference,
            "sequential_rademacher": rademacher,
            "pass": pass,
        }),
    })
}

fn cmd_validate_tails(
    kind: TailArg,
    instance: Option<PathBuf>,
    levels: Vec<f64>,
    spec: Option<PathBuf>,
    generator: String,
    replicates: Option<usize>,
    seed: Option<u64>,
) -> Result<Outcome> {
    if let TailArg::Maximal = kind {
        let spec: TailSpec = read_json(&spec.context("--kind maximal needs --spec")?)?;
        let generator = TailGenerator::from_name(&generator)?;
        let report =
            maximal_inequality_mc(&spec, generator, replicates.unwrap_or(100_000), &rng(seed))?;
        return Ok(Outcome {
            pass: report.pass,
            report: to_value(&report)?,
        });
    }
    let instance: TailInstance = read_json(&instance.context("tail kinds need --instance")?)?;
    let expected = match kind {
        TailArg::Pinelis => TailKind::Pinelis,
        TailArg::Chaining => TailKind::Chaining,
        _ => TailKind::OffsetProcess,
    };
    if instance.kind() != expected {
        bail!(
            "instance is of kind {:?}, --kind asks for {expected:?}",
            instance.kind()
        );
    }
    if levels.is_empty() {
        bail!("give at least one level with --levels");
    }
    let mode = match replicates {
        Some(r) => EstimationMode::MonteCarlo {
            replicates: r,
            rng: rng(seed),
        },
        None => EstimationMode::Exact,
    };
    let report = tail_validate(&instance, &levels, &mode)?;
    Ok(Outcome {
        pass: report.pass,
        report: to_value(&report)?,
    })
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    let seed = cli.seed;
    match cli.command {
        Command::Run { config, csv } => cmd_run(&config, csv, seed),
        Command::Audit { report, tolerance } => cmd_audit(&report, tolerance),
        Command::Oracle {
            game,
            rate,
            rate_file,
            value,
            tol,
        } => cmd_oracle(&game, rate, rate_file, value, tol),
        Command::Admissible {
            game,
            strategy,
            i_max,
            lambda_mode,
            sampled,
            tol,
        } => cmd_admissible(&game, strategy, i_max, lambda_mode, sampled, tol, seed),
        Command::Complexity {
            table,
            size,
            depth,
            form,
            alpha,
            replicates,
        } => cmd_complexity(table, size, depth, form, alpha, replicates, seed),
        Command::ValidateTails {
            kind,
            instance,
            levels,
            spec,
            generator,
            replicates,
        } => cmd_validate_tails(kind, instance, levels, spec, generator, replicates, seed),
    }
}

/// Writes to stdout; a reader that closed the pipe early is not an error.
fn emit_stdout(text: &str) {
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = stdout
        .write_all(text.as_bytes())
        .and_then(|()| stdout.flush())
    {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: writing stdout: {e}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    let outcome = match dispatch(cli) {
        Ok(o) => o,
        Err(e) => {
            let report = json!({ "error": format!("{e:#}"), "pass": false });
            let mut text = serde_json::to_string_pretty(&report).unwrap_or_default();
            text.push('\n');
            emit_stdout(&text);
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let mut text = match serde_json::to_string_pretty(&outcome.report) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    text.push('\n');
    emit_stdout(&text);
    if let Some(path) = out {
        if let Err(e) = std::fs::write(&path, &text) {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    if outcome.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

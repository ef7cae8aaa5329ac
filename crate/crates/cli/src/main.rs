//! Config-driven experiment runner.
//!
//! Subcommands: `qfi`, `simulate`, `sweep`, `verify-lemma`, `adaptive`.
//! Exit codes: 0 success, 2 config/validation error, 3 numerical or bound
//! failure. Identical config and seed produce byte-identical output files.
//! `METROLOGY_THREADS` caps the worker count (default: all cores).

mod commands;
mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use output::OutputFormat;

#[derive(Debug, Error)]
pub enum CliError {
    /// Configuration or validation problem (exit code 2).
    #[error("{0}")]
    Config(String),
    /// Numerical failure or violated bound (exit code 3).
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<qmetro::Error> for CliError {
    fn from(e: qmetro::Error) -> Self {
        use qmetro::Error::*;
        match e {
            SldResidual { .. }
            | SingularParametrization { .. }
            | SingularMatrix(_)
            | EstimatorBreakdown { .. }
            | NotPsd { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qmetro",
    about = "Fisher-information analysis and estimation-scheme simulation for parametrized unitary channels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output base path; writes <out>.json and/or <out>.csv. Prints JSON to
    /// stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Which files to write when --out is given.
    #[arg(long, value_enum, default_value = "both")]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Quantum information, measurement information, and their gap for a
    /// configured scheme.
    Qfi(CommonArgs),
    /// Monte-Carlo mean-square-error experiment.
    Simulate(CommonArgs),
    /// Repeated experiments over a list of shot budgets or channel counts.
    Sweep(CommonArgs),
    /// Probe-state optimality verification: bound sweeps, optimizer
    /// attainment, and entanglement certification.
    VerifyLemma(CommonArgs),
    /// One staged adaptive estimation trace.
    Adaptive(CommonArgs),
}

fn read_config(args: &CommonArgs) -> Result<String, CliError> {
    fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))
}

fn setup_threads() -> Result<(), CliError> {
    if let Ok(value) = std::env::var("METROLOGY_THREADS") {
        let threads: usize = value.parse().map_err(|_| {
            CliError::Config(format!("METROLOGY_THREADS must be a positive integer, got {value:?}"))
        })?;
        if threads == 0 {
            return Err(CliError::Config(
                "METROLOGY_THREADS must be a positive integer".into(),
            ));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    setup_threads()?;
    match cli.command {
        Command::Qfi(args) => {
            let mut cfg: config::QfiConfig = config::parse(&read_config(&args)?)?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            let report = commands::cmd_qfi(cfg)?;
            output::emit(&report, None, args.out.as_deref(), args.format)?;
            Ok(0)
        }
        Command::Simulate(args) => {
            let mut cfg: config::SimulateConfig = config::parse(&read_config(&args)?)?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            let (report, csv) = commands::cmd_simulate(cfg)?;
            output::emit(&report, Some(csv), args.out.as_deref(), args.format)?;
            Ok(0)
        }
        Command::Sweep(args) => {
            let mut cfg: config::SweepConfig = config::parse(&read_config(&args)?)?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            let (report, csv) = commands::cmd_sweep(cfg)?;
            output::emit(&report, Some(csv), args.out.as_deref(), args.format)?;
            Ok(0)
        }
        Command::VerifyLemma(args) => {
            let mut cfg: config::VerifyLemmaConfig = config::parse(&read_config(&args)?)?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            let report = commands::cmd_verify_lemma(cfg)?;
            let pass = report.pass;
            output::emit(&report, None, args.out.as_deref(), args.format)?;
            if pass {
                Ok(0)
            } else {
                eprintln!("verify-lemma: at least one bound check failed");
                Ok(3)
            }
        }
        Command::Adaptive(args) => {
            let mut cfg: config::AdaptiveConfig = config::parse(&read_config(&args)?)?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            let report = commands::cmd_adaptive(cfg)?;
            output::emit(&report, None, args.out.as_deref(), args.format)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

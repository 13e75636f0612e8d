//! Command-line front end for the apparatus simulator.
//!
//! Exit codes: 0 success, 2 validation (bad flags or config), 3
//! runtime/statistical failures, 4 I/O failures.

mod commands;
mod config;
mod persist;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::commands::RunContext;
use crate::config::RunConfig;

/// Environment variable overriding the configured output directory
/// (the --out flag wins over both).
const OUT_DIR_ENV: &str = "SUPERLUM_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "superlum",
    version,
    about = "Simulate a superluminal-signaling apparatus and evaluate its reliability"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form design report: speed range, feasibility, sensitivity sweep
    Plan(CommonArgs),
    /// Run the scheduled cycles and persist the alarm log
    Simulate(CommonArgs),
    /// Estimate reliability, effective speed, and the channel bound
    Estimate(EstimateArgs),
    /// Run the round-trip posterior chain and its frame construction
    Antinomy(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file
    #[arg(long)]
    config: PathBuf,
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory override
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cycles-per-level override
    #[arg(long)]
    cycles: Option<usize>,
    /// Suppress informational output
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Alarm log to analyze (default: `<out>/alarms.log`)
    #[arg(long)]
    logs: Option<PathBuf>,
}

fn context(args: &CommonArgs) -> Result<RunContext, CliError> {
    let config = RunConfig::load(&args.config)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&config.run.out_dir));
    let master_seed = args.seed.unwrap_or(config.run.master_seed);
    Ok(RunContext {
        config,
        master_seed,
        out_dir,
        cycles_override: args.cycles,
        quiet: args.quiet,
    })
}

fn run() -> Result<(), CliError> {
    match Cli::parse().command {
        Command::Plan(args) => commands::plan(&context(&args)?),
        Command::Simulate(args) => commands::simulate(&context(&args)?),
        Command::Estimate(args) => {
            let ctx = context(&args.common)?;
            commands::estimate(&ctx, args.logs.as_deref())
        }
        Command::Antinomy(args) => commands::antinomy(&context(&args)?),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}

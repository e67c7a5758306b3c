//! `spinbal`: rotor imbalance suppression pipeline.
//!
//! Subcommands cover the stages end to end: closed-form steady optima,
//! open-loop optimal control by direct transcription, Euler-Lagrange
//! shooting verification, decay-bound certification, value-iteration
//! feedback synthesis, and closed-loop rollouts. Artifacts are written
//! to the output directory; the process exits 0 when every check
//! passes, 2 when a check fails, and 1 on errors.

mod artifacts;
mod config;
mod run;

use clap::{Parser, Subcommand as ClapSubcommand, ValueEnum};
use config::{load_config, RunConfig};
use run::{Format, Pipeline, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Parser)]
#[command(name = "spinbal", about = "Rotor imbalance suppression pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON). Defaults to the built-in demo scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's out_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized checks; overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tabular artifact format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Closed-form steady optima and balance feasibility.
    Steady,
    /// Open-loop optimum by direct transcription.
    Solve,
    /// Euler-Lagrange shooting cross-check of the optimum.
    Simulate,
    /// Decay-bound certificates and rate analysis.
    Analyze,
    /// Per-head value iteration tables.
    ValueIter,
    /// Closed-loop feedback rollouts against the tables.
    Rollout,
    /// The whole pipeline.
    All,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("SPINBAL_LOG")).init();
    let cli = Cli::parse();

    let mut cfg = match &cli.config {
        Some(path) => match load_config(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
        },
        None => RunConfig::demo(),
    };
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }

    let (cmd, name) = match cli.command {
        Command::Steady => (Subcommand::Steady, "steady"),
        Command::Solve => (Subcommand::Solve, "solve"),
        Command::Simulate => (Subcommand::Simulate, "simulate"),
        Command::Analyze => (Subcommand::Analyze, "analyze"),
        Command::ValueIter => (Subcommand::ValueIter, "value-iter"),
        Command::Rollout => (Subcommand::Rollout, "rollout"),
        Command::All => (Subcommand::All, "all"),
    };
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };

    let mut pipeline = Pipeline::new(cfg, format);
    match pipeline.execute(cmd, name) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! Config-driven runs of the bvarch library: simulate, ingest, fit, diagnose
//! and compare.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::Invocation;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "bvarch", version, about = "Bayesian VAR models with conditionally heteroskedastic errors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Flags {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the posterior and write draws, report, summary and forecasts.
    Fit(Flags),
    /// Tabulate WAIC, LOOIC and spectral radius across fitted runs.
    Compare(Flags),
    /// Simulate a dataset on the seven-site demo design.
    Simulate(Flags),
    /// Build a dataset from raw sensor, wind, operations and site files.
    Ingest(Flags),
    /// Recompute diagnostics and criteria from saved draws.
    Diagnose(Flags),
}

impl From<&Flags> for Invocation {
    fn from(f: &Flags) -> Self {
        Invocation { config: f.config.clone(), seed: f.seed, out: f.out.clone() }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Fit(f) => commands::fit(&f.into()),
        Command::Compare(f) => commands::compare(&f.into()),
        Command::Simulate(f) => commands::simulate_cmd(&f.into()),
        Command::Ingest(f) => commands::ingest(&f.into()),
        Command::Diagnose(f) => commands::diagnose(&f.into()),
    }
}

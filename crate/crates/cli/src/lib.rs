//! Command-line front end: curves, ensembles, tables, crossings, speed-up and
//! the acceptance suite, all emitting CSV.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rsp_core::validation::Level;
use rsp_core::BenchmarkConvention;

use crate::config::{ConfigFile, Engine, RunConfig, Settings};
pub use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "rsp",
    version,
    about = "Rapid state preparation by Markovian feedback"
)]
pub struct Cli {
    #[command(flatten)]
    pub settings: Settings,
    /// TOML file of defaults with optional per-scenario tables
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Curve of one scenario on a uniform time grid (default engine: analytic)
    Curve,
    /// Ensemble mean and standard error (default engine: sme)
    Ensemble,
    /// Parameter-range tables; the formatted table goes to stdout, CSV to --out
    Tables {
        /// 1 (fixed time) or 2 (fixed length); both when absent
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        which: Option<u8>,
    },
    /// Crossing times; a reference set unless --lo and --hi bracket a
    /// crossing of --scenario with the benchmark (default benchmark: bloch)
    Crossings {
        #[arg(long, requires = "hi")]
        lo: Option<f64>,
        #[arg(long, requires = "lo")]
        hi: Option<f64>,
    },
    /// Asymptotic speed-up of ideal feedback over measurement alone
    Speedup {
        #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12])]
        eps: Vec<f64>,
    },
    /// Run the acceptance criteria; exit 1 if any fails
    Validate {
        #[arg(long, default_value = "quick")]
        level: Level,
        /// Criterion to run (repeatable); all when absent
        #[arg(long = "criterion")]
        criteria: Vec<u8>,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    let file = cli.config.as_deref().map(ConfigFile::load).transpose()?;
    let resolve = |engine, benchmark| {
        RunConfig::resolve(cli.settings.clone(), file.as_ref(), engine, benchmark)
    };
    let lambda = BenchmarkConvention::LambdaMax;
    match cli.command {
        Command::Curve => commands::cmd_curve(&resolve(Engine::Analytic, lambda)?),
        Command::Ensemble => commands::cmd_ensemble(&resolve(Engine::Sme, lambda)?),
        Command::Tables { which } => {
            let cfg = resolve(Engine::Analytic, lambda)?;
            commands::cmd_tables(which, cfg.benchmark, cfg.out.as_deref())
        }
        Command::Crossings { lo, hi } => {
            let cfg = resolve(Engine::Analytic, BenchmarkConvention::BlochLength)?;
            commands::cmd_crossings(&cfg, lo.zip(hi))
        }
        Command::Speedup { eps } => {
            let cfg = resolve(Engine::Analytic, lambda)?;
            commands::cmd_speedup(&eps, cfg.out.as_deref())
        }
        Command::Validate { level, criteria } => {
            let cfg = resolve(Engine::Analytic, lambda)?;
            commands::cmd_validate(level, &criteria, cfg.out.as_deref())
        }
    }
}

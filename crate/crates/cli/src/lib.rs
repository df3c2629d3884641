//! Command-line shell of the homlab laboratory: TOML experiment configs,
//! reproducible runs keyed by a config hash and seed, and data-only outputs
//! (JSON summaries, CSV tables, binary field dumps) with a run manifest.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{Context, Outcome};
use config::LoadedConfig;
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "homlab", version, about = "Elliptic homogenization experiments with random potentials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the cell problems and write the effective matrix.
    Corrector(RunArgs),
    /// Run the Monte Carlo sweep over the periods and fit the scalings.
    Sweep(RunArgs),
    /// Sample the limit law and compare it with the stored sweep.
    Limitlaw(RunArgs),
    /// Check the random-field generators against their models.
    Fieldcheck(RunArgs),
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Base seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    fn args(&self) -> &RunArgs {
        match self {
            Command::Corrector(a) | Command::Sweep(a) | Command::Limitlaw(a) | Command::Fieldcheck(a) => a,
        }
    }
}

pub fn context(args: &RunArgs) -> CliResult<Context> {
    let loaded = LoadedConfig::from_path(&args.config)?;
    let jobs = match args.jobs {
        Some(0) => return Err(CliError::Config("--jobs must be positive".into())),
        Some(j) => j,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    homlab::exec::configure_threads(jobs).map_err(CliError::Runtime)?;
    Ok(Context {
        seed: args.seed.unwrap_or(loaded.config.seed),
        out: args.out.clone().unwrap_or_else(|| loaded.config.output.dir.clone()),
        jobs,
        loaded,
    })
}

pub fn run(cli: &Cli) -> CliResult<Outcome> {
    let ctx = context(cli.command.args())?;
    Ok(match &cli.command {
        Command::Corrector(_) => commands::run_corrector(&ctx)?.0,
        Command::Sweep(_) => commands::run_sweep_command(&ctx)?.0,
        Command::Limitlaw(_) => commands::run_limitlaw(&ctx)?.0,
        Command::Fieldcheck(_) => commands::run_fieldcheck(&ctx)?.0,
    })
}

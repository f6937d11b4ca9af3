//! `randcast`: reproducible rolling forecasts with randomized-network
//! ensembles.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error,
//! 3 numerical failure.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
pub use error::CliError;

#[derive(Parser)]
#[command(
    name = "randcast",
    version,
    about = "Pattern-based time series forecasting with randomized-network ensembles"
)]
struct Cli {
    /// Worker threads for parallel training (default: all cores).
    /// Output artifacts do not depend on this value.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a rolling daily forecast and write forecast.csv, metrics.json
    /// and manifest.json.
    Forecast {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's top-level seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides the config's `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overwrite a non-empty output directory.
        #[arg(long)]
        force: bool,
    },
    /// Rerun the forecast over a grid of diversity parameters and write
    /// a MAPE/diversity table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Compare finished runs pairwise (conditional predictive ability)
    /// and tabulate their metrics side by side.
    Compare {
        /// Run directories holding forecast.csv, at least two.
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Generate the configured synthetic series as an hourly CSV.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

fn load_config(
    path: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(RunConfig, PathBuf), CliError> {
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(out) = out {
        config.output_dir = Some(out);
    }
    let out_dir = config.output_dir.clone().ok_or_else(|| {
        CliError::Config("no output directory: set `output_dir` in the config or pass --out".into())
    })?;
    Ok((config, out_dir))
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Forecast {
            config,
            seed,
            out,
            force,
        } => {
            let (config, out_dir) = load_config(&config, seed, out)?;
            commands::cmd_forecast(&config, &out_dir, force)
        }
        Command::Sweep {
            config,
            seed,
            out,
            force,
        } => {
            let (config, out_dir) = load_config(&config, seed, out)?;
            commands::cmd_sweep(&config, &out_dir, force)
        }
        Command::Compare { runs, out, force } => commands::cmd_compare(&runs, &out, force),
        Command::Synth {
            config,
            seed,
            out,
            force,
        } => {
            let (config, out_dir) = load_config(&config, seed, out)?;
            commands::cmd_synth(&config, &out_dir, force)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: config: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: config: cannot size the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

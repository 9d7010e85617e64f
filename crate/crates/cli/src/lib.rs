//! The `brfp` command-line tool.
//!
//! Every subcommand computes all of its outputs in memory first and only then
//! creates the output directory, so a rejected input never leaves partial
//! files behind.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
pub use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "brfp", version, about = "Joint Bayesian reconstruction of a signal and its spectrum")]
pub struct Cli {
    /// TOML experiment configuration; defaults are used for anything missing.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Seed for every random stream, overriding all seeds in the config.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Directory for output files, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a signal and spectrum pair from the prior.
    Sample,
    /// Posterior over signal and spectrum from an observation file.
    Reconstruct(ReconstructArgs),
    /// Posterior over an image from part of its 2D spectrum.
    #[command(name = "reconstruct2d")]
    Reconstruct2d(Reconstruct2dArgs),
    /// The sum-of-sinewaves periodicity study against Lomb-Scargle.
    Periodicity(PeriodicityArgs),
    /// Maximum-likelihood kernel hyperparameters.
    Train(TrainArgs),
    /// Compare two CSV columns with NMSE, L0.1 or KL.
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Observations CSV (domain,index,value_real,value_imag,noise_variance).
    #[arg(long, value_name = "PATH")]
    pub observations: PathBuf,
    /// A signal CSV with a `value` column, for the NMSE report.
    #[arg(long, value_name = "PATH")]
    pub truth: Option<PathBuf>,
    /// A spectrum CSV with `real` and `imag` columns, for the NMSE report.
    #[arg(long, value_name = "PATH")]
    pub truth_spectrum: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Reconstruct2dArgs {
    /// Square 0/1 grid of observed frequencies; `[image].side` is taken from it.
    #[arg(long, value_name = "PATH")]
    pub mask: Option<PathBuf>,
    /// Observed 2D coefficients as `freq` rows of an observations CSV.
    #[arg(long, value_name = "PATH")]
    pub spectrum: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PeriodicityArgs {
    /// Repeat the study with seeds `seed + i` for `i < COUNT` and summarise
    /// the runs in `realizations.csv`.
    #[arg(long, value_name = "COUNT", default_value_t = 1)]
    pub realizations: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Observations CSV; without it, data are drawn from the configured model.
    #[arg(long, value_name = "PATH")]
    pub observations: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long, value_name = "PATH")]
    pub truth: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub estimate: PathBuf,
    /// Column compared in both files.
    #[arg(long, default_value = "value")]
    pub column: String,
    /// Any of `nmse`, `l01`, `kl`; repeat for several. Without it, all three
    /// are reported, leaving out `kl` when a column has negative values.
    #[arg(long = "metric", value_name = "NAME")]
    pub metrics: Vec<String>,
}

/// A named output file and its contents.
pub type Output = (String, String);

/// Runs a command and writes its files, returning the paths written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.training.seed = seed;
        cfg.periodicity.seed = seed;
        cfg.image.seed = seed;
    }
    cfg.validate()?;
    let outputs = match &cli.command {
        Command::Sample => commands::sample::run(&cfg)?,
        Command::Reconstruct(a) => commands::reconstruct::run(&cfg, a)?,
        Command::Reconstruct2d(a) => commands::reconstruct2d::run(&cfg, a)?,
        Command::Periodicity(a) => commands::periodicity::run(&cfg, a)?,
        Command::Train(a) => commands::train::run(&cfg, a)?,
        Command::Metrics(a) => commands::metrics::run(a)?,
    };
    write_outputs(&cli.out, &outputs)
}

fn write_outputs(dir: &Path, outputs: &[Output]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    outputs
        .iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

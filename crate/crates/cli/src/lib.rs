//! Command-line front end for the `qshrink` estimators.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser};

pub use commands::{compute, run, Command, Output, Table};
pub use config::{Overrides, RunConfig};
pub use error::{CliError, CliResult};
pub use output::Manifest;

#[derive(Debug, Parser)]
#[command(name = "qshrink", version, about = "Quantile shrinkage estimation under autoregressive errors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Input CSV with a header row
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Response column name
    #[arg(long, global = true)]
    pub response: Option<String>,
    /// Covariate columns, comma separated; all others by default
    #[arg(long, global = true, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
    /// Retained covariates, 1-based (e.g. 1,2,5 or 1-3)
    #[arg(long, global = true)]
    pub keep: Option<String>,
    /// Tested covariates, 1-based
    #[arg(long = "test-idx", global = true)]
    pub test_idx: Option<String>,
    /// Quantile levels, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub tau: Option<Vec<f64>>,
    /// Pretest significance level
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON configuration file; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long = "out-dir", global = true)]
    pub out_dir: Option<PathBuf>,
    /// Any configuration key, e.g. --set n_reps=200
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl Flags {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            data: self.data.clone(),
            response: self.response.clone(),
            covariates: self.covariates.clone(),
            keep: self.keep.clone(),
            test_idx: self.test_idx.clone(),
            tau: self.tau.clone(),
            alpha: self.alpha,
            seed: self.seed,
            out_dir: self.out_dir.clone(),
            set: self.set.clone(),
        }
    }
}

/// Resolves the configuration and runs the command.
pub fn execute(cli: &Cli) -> CliResult<Manifest> {
    let cfg = RunConfig::resolve(cli.flags.config.as_deref(), &cli.flags.overrides())?;
    run(cli.command, &cfg)
}

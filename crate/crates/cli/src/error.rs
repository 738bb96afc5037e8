use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qshrink::Error),

    #[error("configuration: {0}")]
    Config(String),

    #[error("reading {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("writing {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// One code per error class; 2 is shared with clap's usage errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.class() {
                "argument" => 2,
                "input" => 3,
                "io" => 4,
                "singular" => 5,
                "numeric" => 6,
                "convergence" => 7,
                _ => 1,
            },
            CliError::Config(_) => 2,
            CliError::ReadConfig { .. } | CliError::Write { .. } => 4,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

//! Atomic artifact writing and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Writes `out_dir/name` by filling a temporary file in the same directory
/// and renaming it into place.
pub fn write_atomic(out_dir: &Path, name: &str, fill: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<PathBuf> {
    let path = out_dir.join(name);
    let wrap = |source| CliError::Write {
        path: path.clone(),
        source,
    };
    let mut tmp = NamedTempFile::new_in(out_dir).map_err(wrap)?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf)?;
        buf.flush().map_err(wrap)?;
    }
    tmp.persist(&path).map_err(|e| wrap(e.error))?;
    Ok(path)
}

#[derive(Debug, Clone, Serialize)]
pub struct DataSummary {
    pub path: PathBuf,
    pub response: String,
    pub covariates: Vec<String>,
    pub rows: usize,
    /// 1-based data rows dropped for missing cells.
    pub dropped_rows: Vec<usize>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub load_ms: f64,
    pub compute_ms: f64,
    pub write_ms: f64,
    pub total_ms: f64,
}

/// Everything needed to repeat a run: feeding `config` back through
/// `--config` with the same versions reproduces every CSV exactly.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub cli_version: &'static str,
    pub core_version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub data: Option<DataSummary>,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
    pub timings: Timings,
}

pub const MANIFEST_NAME: &str = "manifest.json";

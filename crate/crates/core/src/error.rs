use thiserror::Error;

/// Errors raised by the estimation, simulation and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("quantile level {0} is outside (0, 1)")]
    TauDomain(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("sparsity estimation failed: {0}")]
    Sparsity(String),

    #[error("shrinkage undefined at zero Wald statistic")]
    ZeroWald,

    #[error("moment does not exist: {0}")]
    MomentUndefined(String),

    #[error("penalized fit did not converge at lambda index {index} (KKT residual {kkt:.3e})")]
    NotConverged { index: usize, kkt: f64 },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("non-numeric cell at row {row}, column `{column}`: {value:?}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable class name, used by the CLI for exit codes.
    pub fn class(&self) -> &'static str {
        match self {
            Error::TauDomain(_) | Error::InvalidArgument(_) | Error::Dimension(_) => "argument",
            Error::Singular(_) => "singular",
            Error::Sparsity(_) | Error::ZeroWald | Error::MomentUndefined(_) => "numeric",
            Error::NotConverged { .. } => "convergence",
            Error::MissingColumn(_) | Error::NonNumeric { .. } | Error::Empty(_) | Error::Csv(_) => {
                "input"
            }
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::TauDomain(tau))
    }
}

//! Quantile regression with pretest and Stein-type shrinkage estimation under
//! autoregressive errors.

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod linalg;
pub mod montecarlo;
pub mod penalized;
pub mod qprocess;
pub mod covariance;
pub mod ncchisq;
pub mod quantile;
pub mod risk;
pub mod shrinkage;
pub mod special;

pub use data::{Dataset, PartitionSpec};
pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

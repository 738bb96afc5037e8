//! Quantile-process table: coefficient estimates over a τ grid with
//! pairs-bootstrap percentile bands and the OLS estimate with its
//! t interval.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::Dataset;
use crate::error::{check_tau, Error, Result};
use crate::linalg::{quantile_sorted, sorted_copy};
use crate::montecarlo::{stream, StreamRole};
use crate::quantile::{fit_ols, fit_quantile};

/// `0.05, 0.10, …, 0.95`.
pub fn default_tau_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessRow {
    pub covariate: String,
    pub tau: f64,
    pub estimate: f64,
    pub band_low: Option<f64>,
    pub band_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsRow {
    pub covariate: String,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileProcess {
    pub rows: Vec<ProcessRow>,
    pub ols: Vec<OlsRow>,
    pub level: f64,
    pub n_boot: usize,
    /// Bootstrap fits that failed and were left out of the bands.
    pub failures: usize,
}

/// Estimates at every τ in `grid`; with `n_boot > 0`, pointwise percentile
/// bands at `level` from resampling rows with replacement.
pub fn quantile_process(data: &Dataset, grid: &[f64], n_boot: usize, level: f64, seed: u64) -> Result<QuantileProcess> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty quantile grid".into()));
    }
    for &t in grid {
        check_tau(t)?;
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level {level} is outside (0, 1)")));
    }
    let labels = data.coef_labels();
    let k = labels.len();
    let point = grid
        .iter()
        .map(|&t| fit_quantile(data, t, None).map(|f| f.beta))
        .collect::<Result<Vec<_>>>()?;
    // draws[b][g] = coefficients of resample b at grid point g
    let draws: Vec<Option<Vec<nalgebra::DVector<f64>>>> = (0..n_boot as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b, StreamRole::Resample);
            let n = data.n();
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let d = data.select_rows(&rows);
            grid.iter().map(|&t| fit_quantile(&d, t, None).map(|f| f.beta).ok()).collect()
        })
        .collect();
    let failures = draws.iter().filter(|d| d.is_none()).count();
    let good: Vec<&Vec<nalgebra::DVector<f64>>> = draws.iter().flatten().collect();
    let (lo_p, hi_p) = ((1.0 - level) / 2.0, (1.0 + level) / 2.0);
    let mut rows = Vec::with_capacity(k * grid.len());
    for (j, label) in labels.iter().enumerate() {
        for (g, &tau) in grid.iter().enumerate() {
            let (band_low, band_high) = if good.is_empty() {
                (None, None)
            } else {
                let s = sorted_copy(&good.iter().map(|d| d[g][j]).collect::<Vec<_>>());
                (Some(quantile_sorted(&s, lo_p)), Some(quantile_sorted(&s, hi_p)))
            };
            rows.push(ProcessRow {
                covariate: label.clone(),
                tau,
                estimate: point[g][j],
                band_low,
                band_high,
            });
        }
    }
    let ols = fit_ols(data)?;
    let df = (data.n() - k) as f64;
    let tq = if df > 0.0 {
        StudentsT::new(0.0, 1.0, df)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .inverse_cdf(hi_p)
    } else {
        f64::NAN
    };
    let se = ols.std_errors();
    let ols = labels
        .iter()
        .enumerate()
        .map(|(j, l)| OlsRow {
            covariate: l.clone(),
            estimate: ols.beta[j],
            ci_low: ols.beta[j] - tq * se[j],
            ci_high: ols.beta[j] + tq * se[j],
        })
        .collect();
    Ok(QuantileProcess {
        rows,
        ols,
        level,
        n_boot,
        failures,
    })
}

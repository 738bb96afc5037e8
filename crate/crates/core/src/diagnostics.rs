//! Regression diagnostics: lagged Durbin–Watson statistics, variance
//! inflation factors, the design condition ratio, a studentized-residual
//! outlier test and the residual ACF.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::montecarlo::{stream, StreamRole};
use crate::quantile::fit_ols;

pub const DEFAULT_PERMUTATIONS: usize = 2000;

/// Biased sample ACF of the demeaned series for lags `0..=max_lag`.
pub fn acf(residuals: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = residuals.len();
    if max_lag >= n {
        return Err(Error::InvalidArgument(format!("max lag {max_lag} for {n} observations")));
    }
    let m = residuals.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = residuals.iter().map(|r| r - m).collect();
    let c0: f64 = c.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) {
        return Err(Error::InvalidArgument("constant series has no autocorrelation".into()));
    }
    Ok((0..=max_lag)
        .map(|l| c[l..].iter().zip(&c[..n - l]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DwRow {
    pub lag: usize,
    /// `Σᵢ rᵢ r_{i−ℓ} / Σᵢ rᵢ²`, uncentered.
    pub autocorr: f64,
    /// `Σ_{i>ℓ}(rᵢ − r_{i−ℓ})² / Σᵢ rᵢ²`.
    pub dw: f64,
    /// Two-sided permutation p-value.
    pub p_value: f64,
}

fn dw_stat(r: &[f64], lag: usize, ss: f64) -> f64 {
    r[lag..].iter().zip(&r[..r.len() - lag]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / ss
}

/// Durbin–Watson statistic at `lag` with a permutation p-value over
/// `n_perm` random reorderings of the residuals.
pub fn durbin_watson(residuals: &[f64], lag: usize, n_perm: usize, seed: u64) -> Result<DwRow> {
    let n = residuals.len();
    if n < 8 {
        return Err(Error::InvalidArgument(format!("{n} residuals are too few for a Durbin–Watson test")));
    }
    if lag == 0 || 4 * lag >= n {
        return Err(Error::InvalidArgument(format!("lag {lag} must be in 1..n/4 for n = {n}")));
    }
    let ss: f64 = residuals.iter().map(|v| v * v).sum();
    if ss == 0.0 {
        // all differences vanish
        return Ok(DwRow {
            lag,
            autocorr: f64::NAN,
            dw: 0.0,
            p_value: f64::NAN,
        });
    }
    let autocorr = residuals[lag..].iter().zip(&residuals[..n - lag]).map(|(a, b)| a * b).sum::<f64>() / ss;
    let dw = dw_stat(residuals, lag, ss);
    let p_value = if n_perm == 0 {
        f64::NAN
    } else {
        const CHUNK: usize = 250;
        let chunks = n_perm.div_ceil(CHUNK);
        let (below, above) = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream(seed, ((lag as u64) << 32) | c as u64, StreamRole::Permutation);
                let mut buf = residuals.to_vec();
                let (mut lo, mut hi) = (0usize, 0usize);
                for _ in 0..CHUNK.min(n_perm - c * CHUNK) {
                    buf.shuffle(&mut rng);
                    let v = dw_stat(&buf, lag, ss);
                    lo += usize::from(v <= dw);
                    hi += usize::from(v >= dw);
                }
                (lo, hi)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        let b = n_perm as f64 + 1.0;
        (2.0 * ((below as f64 + 1.0) / b).min((above as f64 + 1.0) / b)).min(1.0)
    };
    Ok(DwRow {
        lag,
        autocorr,
        dw,
        p_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VifEntry {
    pub label: String,
    /// `+∞` under exact collinearity.
    pub value: f64,
    /// Most correlated other column when the value is infinite.
    pub collinear_with: Option<String>,
}

/// `VIF_j = 1/(1 − R²_j)` from regressing column `j` on the others with an
/// intercept.
pub fn vif(data: &Dataset) -> Result<Vec<VifEntry>> {
    let (n, p) = (data.n(), data.p());
    if p < 2 {
        return Err(Error::InvalidArgument("VIF needs at least two covariates".into()));
    }
    let x = data.x();
    let centered = DMatrix::from_fn(n, p, |i, j| x[(i, j)] - x.column(j).mean());
    let mut out = Vec::with_capacity(p);
    for j in 0..p {
        let yj = centered.column(j).clone_owned();
        let tss = yj.norm_squared();
        if tss == 0.0 {
            return Err(Error::Singular(format!("column `{}` is constant", data.labels()[j])));
        }
        let others: Vec<usize> = (0..p).filter(|&k| k != j).collect();
        let z = centered.select_columns(&others);
        let svd = z.clone().svd(true, true);
        let tol = 1e-12 * svd.singular_values.max().max(1.0);
        let coef = svd
            .solve(&yj, tol)
            .map_err(|e| Error::Singular(format!("auxiliary regression for `{}`: {e}", data.labels()[j])))?;
        let rss = (&yj - &z * coef).norm_squared();
        let ratio = rss / tss;
        if ratio < 1e-12 {
            let partner = others
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    let ca = yj.dot(&centered.column(a)).abs() / centered.column(a).norm().max(f64::MIN_POSITIVE);
                    let cb = yj.dot(&centered.column(b)).abs() / centered.column(b).norm().max(f64::MIN_POSITIVE);
                    ca.total_cmp(&cb)
                })
                .map(|k| data.labels()[k].clone());
            out.push(VifEntry {
                label: data.labels()[j].clone(),
                value: f64::INFINITY,
                collinear_with: partner,
            });
        } else {
            out.push(VifEntry {
                label: data.labels()[j].clone(),
                value: 1.0 / ratio,
                collinear_with: None,
            });
        }
    }
    Ok(out)
}

/// Column treatment before forming `X'X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionScaling {
    /// The covariates as given.
    #[default]
    Raw,
    Centered,
    /// Centered with unit variance, the correlation-matrix ratio.
    Standardized,
}

/// `λ_max(X'X) / λ_min(X'X)` of the covariate matrix.
pub fn condition_ratio(data: &Dataset, scaling: ConditionScaling) -> Result<f64> {
    let (n, p) = (data.n(), data.p());
    let x = data.x();
    let means = data.column_means();
    let sds = data.column_sds();
    let m = DMatrix::from_fn(n, p, |i, j| match scaling {
        ConditionScaling::Raw => x[(i, j)],
        ConditionScaling::Centered => x[(i, j)] - means[j],
        ConditionScaling::Standardized => (x[(i, j)] - means[j]) / sds[j],
    });
    let gram = m.transpose() * &m;
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) || !lo.is_finite() {
        return Err(Error::Singular("X'X is not positive definite".into()));
    }
    Ok(hi / lo)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutlierRow {
    /// 0-based row index.
    pub index: usize,
    pub rstudent: f64,
    pub p_value: f64,
    pub p_bonferroni: f64,
}

/// Externally studentized OLS residuals against `t_{n−p−2}` with a
/// Bonferroni adjustment; rows with adjusted p below `level`, most extreme
/// first.
pub fn outlier_test(data: &Dataset, level: f64) -> Result<Vec<OutlierRow>> {
    let all = studentized_residuals(data)?;
    let n = data.n();
    let df = (n - data.n_coef() - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rows: Vec<OutlierRow> = all
        .iter()
        .enumerate()
        .map(|(i, &ti)| {
            let p = 2.0 * t.sf(ti.abs());
            OutlierRow {
                index: i,
                rstudent: ti,
                p_value: p,
                p_bonferroni: (p * n as f64).min(1.0),
            }
        })
        .filter(|r| r.p_bonferroni < level)
        .collect();
    rows.sort_by(|a, b| b.rstudent.abs().total_cmp(&a.rstudent.abs()));
    Ok(rows)
}

/// Externally studentized residuals `eᵢ / (s₍ᵢ₎ √(1 − hᵢᵢ))`.
pub fn studentized_residuals(data: &Dataset) -> Result<DVector<f64>> {
    let fit = fit_ols(data)?;
    let n = data.n();
    let k = data.n_coef();
    if n < k + 2 {
        return Err(Error::InvalidArgument("too few rows for studentized residuals".into()));
    }
    let z = data.design();
    let rss = fit.residuals.norm_squared();
    let mut out = DVector::zeros(n);
    for i in 0..n {
        let zi = z.row(i).transpose();
        let h = (zi.transpose() * &fit.xtx_inv * &zi)[(0, 0)];
        let e = fit.residuals[i];
        let s2 = (rss - e * e / (1.0 - h)) / (n - k - 1) as f64;
        out[i] = e / (s2 * (1.0 - h)).sqrt();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub dw_rows: Vec<DwRow>,
    pub vif: Vec<VifEntry>,
    pub condition_ratio: f64,
    pub condition_scaling: ConditionScaling,
    pub outliers: Vec<OutlierRow>,
    pub acf: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsOptions {
    pub max_dw_lag: usize,
    pub max_acf_lag: usize,
    pub n_perm: usize,
    pub seed: u64,
    pub outlier_level: f64,
    pub scaling: ConditionScaling,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        DiagnosticsOptions {
            max_dw_lag: 6,
            max_acf_lag: 20,
            n_perm: DEFAULT_PERMUTATIONS,
            seed: 1,
            outlier_level: 0.05,
            scaling: ConditionScaling::Raw,
        }
    }
}

/// Runs the whole battery on the OLS residuals of `data`.
pub fn diagnose(data: &Dataset, opts: DiagnosticsOptions) -> Result<DiagnosticsReport> {
    let fit = fit_ols(data)?;
    let r: Vec<f64> = fit.residuals.iter().copied().collect();
    let max_dw = opts.max_dw_lag.min((r.len().saturating_sub(1)) / 4);
    let dw_rows = (1..=max_dw)
        .map(|l| durbin_watson(&r, l, opts.n_perm, opts.seed))
        .collect::<Result<Vec<_>>>()?;
    let vif = if data.p() >= 2 { vif(data)? } else { Vec::new() };
    Ok(DiagnosticsReport {
        dw_rows,
        vif,
        condition_ratio: condition_ratio(data, opts.scaling)?,
        condition_scaling: opts.scaling,
        outliers: outlier_test(data, opts.outlier_level)?,
        acf: acf(&r, opts.max_acf_lag.min(r.len() - 1))?,
    })
}

//! Wald test of `β₂ = 0` and the pretest, Stein and positive-part Stein
//! combinations of the full-model (FM) and sub-model (SM) quantile fits.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::covariance::{estimate_covariance, CovarianceEstimate, CovarianceOptions};
use crate::data::{Dataset, PartitionSpec};
use crate::error::{Error, Result};
use crate::linalg::subvector;
use crate::quantile::{fit_quantile, total_check_loss, QuantileFit};
use crate::special::chisq_critical;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorKind {
    FM,
    SM,
    PT,
    S,
    PS,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [Self::FM, Self::SM, Self::PT, Self::S, Self::PS];

    pub fn name(self) -> &'static str {
        match self {
            Self::FM => "FM",
            Self::SM => "SM",
            Self::PT => "PT",
            Self::S => "S",
            Self::PS => "PS",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "FM" => Ok(Self::FM),
            "SM" => Ok(Self::SM),
            "PT" => Ok(Self::PT),
            "S" => Ok(Self::S),
            "PS" => Ok(Self::PS),
            _ => Err(Error::InvalidArgument(format!("unknown estimator `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrinkageResult {
    pub kind: EstimatorKind,
    pub beta: DVector<f64>,
    pub wald: f64,
    /// `p₂ − 2` for the Stein-type estimators.
    pub d: Option<f64>,
    pub critical: Option<f64>,
    pub alpha_level: Option<f64>,
    /// Pretest only: whether the sub-model branch was taken.
    pub chose_submodel: Option<bool>,
    pub warnings: Vec<String>,
}

impl ShrinkageResult {
    fn plain(kind: EstimatorKind, beta: DVector<f64>, wald: f64) -> Self {
        ShrinkageResult {
            kind,
            beta,
            wald,
            d: None,
            critical: None,
            alpha_level: None,
            chose_submodel: None,
            warnings: Vec::new(),
        }
    }
}

/// `𝒲 = n ω⁻² β̂₂' Λ₂₂.₁ β̂₂` with `Λ₂₂.₁` the Schur complement of the
/// precision form of the partitioned covariance.
pub fn wald_stat(fm: &QuantileFit, cov: &CovarianceEstimate, n: usize) -> Result<f64> {
    let b = &cov.blocks;
    let test: Vec<usize> = b.order[b.p1..].to_vec();
    if test.iter().any(|&j| j >= fm.beta.len()) {
        return Err(Error::Dimension("test block exceeds coefficient vector".into()));
    }
    let beta2 = subvector(&fm.beta, &test);
    if beta2.len() != b.precision_22_1.nrows() {
        return Err(Error::Dimension(format!(
            "beta_2 has length {}, weight is {}x{}",
            beta2.len(),
            b.precision_22_1.nrows(),
            b.precision_22_1.ncols()
        )));
    }
    let q = beta2.dot(&(&b.precision_22_1 * &beta2));
    Ok((n as f64 * q / cov.omega_sq).max(0.0))
}

fn check_pair(fm: &DVector<f64>, sm: &DVector<f64>) -> Result<()> {
    if fm.len() != sm.len() {
        return Err(Error::Dimension(format!("FM length {} vs SM length {}", fm.len(), sm.len())));
    }
    Ok(())
}

/// Pretest estimator: SM when `𝒲 < c`, FM otherwise, `c` the upper-α
/// point of `χ²_{p₂}`.
pub fn pretest(fm: &DVector<f64>, sm: &DVector<f64>, wald: f64, alpha_level: f64, p2: usize) -> Result<ShrinkageResult> {
    check_pair(fm, sm)?;
    if !(alpha_level > 0.0 && alpha_level < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha_level} is outside (0, 1)")));
    }
    if p2 == 0 {
        return Err(Error::InvalidArgument("empty test block".into()));
    }
    let c = chisq_critical(alpha_level, p2 as f64);
    let take_sm = wald < c;
    let mut r = ShrinkageResult::plain(EstimatorKind::PT, if take_sm { sm.clone() } else { fm.clone() }, wald);
    r.critical = Some(c);
    r.alpha_level = Some(alpha_level);
    r.chose_submodel = Some(take_sm);
    Ok(r)
}

fn stein_constant(wald: f64, p2: usize) -> Result<(f64, Vec<String>)> {
    if p2 < 3 {
        return Err(Error::InvalidArgument(format!(
            "Stein-type shrinkage requires p2 >= 3 (d = p2 - 2 >= 1), got p2 = {p2}"
        )));
    }
    if wald == 0.0 {
        return Err(Error::ZeroWald);
    }
    if !(wald > 0.0) {
        return Err(Error::InvalidArgument(format!("Wald statistic {wald} must be positive")));
    }
    let d = p2 as f64 - 2.0;
    let mut warnings = Vec::new();
    if d < 3.0 {
        warnings.push(format!("shrinkage constant d = {d} is below 3"));
    }
    Ok((d, warnings))
}

/// Stein estimator `FM − (d/𝒲)(FM − SM)`.
pub fn stein(fm: &DVector<f64>, sm: &DVector<f64>, wald: f64, p2: usize) -> Result<ShrinkageResult> {
    check_pair(fm, sm)?;
    let (d, warnings) = stein_constant(wald, p2)?;
    let k = d / wald;
    let beta = fm.zip_map(sm, |f, s| f - k * (f - s));
    let mut r = ShrinkageResult::plain(EstimatorKind::S, beta, wald);
    r.d = Some(d);
    r.warnings = warnings;
    Ok(r)
}

/// Positive-part Stein estimator: the Stein estimator when `𝒲 > d`, and
/// the sub-model fit itself when `𝒲 ≤ d`.
pub fn positive_stein(fm: &DVector<f64>, sm: &DVector<f64>, wald: f64, p2: usize) -> Result<ShrinkageResult> {
    let mut r = stein(fm, sm, wald, p2)?;
    let d = r.d.unwrap_or_default();
    if wald <= d {
        r.beta = sm.clone();
    }
    r.kind = EstimatorKind::PS;
    Ok(r)
}

/// Everything the combined estimators need from one data set.
#[derive(Debug, Clone)]
pub struct ShrinkageFamily {
    pub full: QuantileFit,
    pub sub: QuantileFit,
    pub covariance: CovarianceEstimate,
    pub wald: f64,
    pub p2: usize,
}

impl ShrinkageFamily {
    /// Fit FM and SM, estimate the covariance and the Wald statistic.
    pub fn fit(data: &Dataset, tau: f64, partition: &PartitionSpec, opts: CovarianceOptions) -> Result<Self> {
        let full = fit_quantile(data, tau, None)?;
        let sub = fit_quantile(data, tau, Some(partition))?;
        let covariance = estimate_covariance(data, &full, partition, opts)?;
        let wald = wald_stat(&full, &covariance, data.n())?;
        Ok(ShrinkageFamily {
            full,
            sub,
            covariance,
            wald,
            p2: partition.p2(),
        })
    }

    pub fn estimate(&self, kind: EstimatorKind, alpha_level: f64) -> Result<ShrinkageResult> {
        let (fm, sm) = (&self.full.beta, &self.sub.beta);
        match kind {
            EstimatorKind::FM => Ok(ShrinkageResult::plain(kind, fm.clone(), self.wald)),
            EstimatorKind::SM => Ok(ShrinkageResult::plain(kind, sm.clone(), self.wald)),
            EstimatorKind::PT => pretest(fm, sm, self.wald, alpha_level, self.p2),
            EstimatorKind::S => stein(fm, sm, self.wald, self.p2),
            EstimatorKind::PS => positive_stein(fm, sm, self.wald, self.p2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BicSelection {
    /// 0-based covariate indices retained (intercept always retained).
    pub keep: Vec<usize>,
    pub bic: f64,
    /// `None` when every covariate is retained, leaving nothing to test.
    pub partition: Option<PartitionSpec>,
    pub exhaustive: bool,
}

pub const DEFAULT_MAX_SUBSET: usize = 15;

fn quantile_bic(data: &Dataset, tau: f64, keep: &[usize]) -> Result<f64> {
    let n = data.n() as f64;
    let loss = if keep.is_empty() {
        if data.has_intercept() {
            let part = PartitionSpec::new(vec![], (0..data.p()).collect(), data.p(), true)?;
            fit_quantile(data, tau, Some(&part))?.objective
        } else {
            total_check_loss(data.y(), tau)
        }
    } else {
        fit_quantile(&data.select_columns(keep)?, tau, None)?.objective
    };
    let k = keep.len() as f64 + if data.has_intercept() { 1.0 } else { 0.0 };
    let mean_loss = (loss / n).max(f64::MIN_POSITIVE);
    Ok(2.0 * n * mean_loss.ln() + k * n.ln())
}

/// Sub-model choice by `BIC_τ = 2n log(mean check loss) + k log n`:
/// exhaustive over all covariate subsets when `p ≤ max_subset`, forward
/// stepwise otherwise.
pub fn select_submodel_bic(data: &Dataset, tau: f64, max_subset: usize) -> Result<BicSelection> {
    let p = data.p();
    let mut best_keep: Vec<usize> = Vec::new();
    let mut best = quantile_bic(data, tau, &[])?;
    let exhaustive = p <= max_subset;
    if exhaustive {
        for mask in 1u64..(1u64 << p) {
            let keep: Vec<usize> = (0..p).filter(|j| mask >> j & 1 == 1).collect();
            let b = quantile_bic(data, tau, &keep)?;
            if b < best {
                best = b;
                best_keep = keep;
            }
        }
    } else {
        loop {
            let mut step: Option<(f64, usize)> = None;
            for j in (0..p).filter(|j| !best_keep.contains(j)) {
                let mut keep = best_keep.clone();
                keep.push(j);
                keep.sort_unstable();
                let b = quantile_bic(data, tau, &keep)?;
                if b < step.map_or(best, |s| s.0) {
                    step = Some((b, j));
                }
            }
            match step {
                Some((b, j)) => {
                    best = b;
                    best_keep.push(j);
                    best_keep.sort_unstable();
                }
                None => break,
            }
        }
    }
    let partition = if best_keep.len() < p {
        Some(PartitionSpec::from_keep(best_keep.clone(), p, data.has_intercept())?)
    } else {
        None
    };
    Ok(BicSelection {
        keep: best_keep,
        bic: best,
        partition,
        exhaustive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> (DVector<f64>, DVector<f64>) {
        (
            DVector::from_vec(vec![1.0, 2.0, -0.5, 0.7, 0.3, 0.1]),
            DVector::from_vec(vec![0.9, 2.2, -0.4, 0.0, 0.0, 0.0]),
        )
    }

    #[test]
    fn pretest_branches() {
        let (fm, sm) = pair();
        assert_eq!(pretest(&fm, &sm, 0.0, 0.05, 3).unwrap().beta, sm);
        assert_eq!(pretest(&fm, &sm, 1e6, 0.05, 3).unwrap().beta, fm);
        assert!(pretest(&fm, &sm, 1.0, 1.0, 3).is_err());
    }

    #[test]
    fn stein_special_points() {
        let (fm, sm) = pair();
        let d = 3.0;
        assert_eq!(stein(&fm, &sm, d, 5).unwrap().beta, sm);
        let mid = stein(&fm, &sm, 2.0 * d, 5).unwrap().beta;
        for j in 0..6 {
            assert!((mid[j] - 0.5 * (fm[j] + sm[j])).abs() < 1e-15);
        }
        let far = stein(&fm, &sm, 1e9, 5).unwrap().beta;
        assert!((far - &fm).amax() < 1e-6);
    }

    #[test]
    fn stein_preconditions() {
        let (fm, sm) = pair();
        assert!(matches!(stein(&fm, &sm, 0.0, 5), Err(Error::ZeroWald)));
        assert!(matches!(stein(&fm, &sm, 2.0, 2), Err(Error::InvalidArgument(_))));
        assert_eq!(stein(&fm, &sm, 2.0, 4).unwrap().warnings.len(), 1);
        assert!(stein(&fm, &sm, 2.0, 5).unwrap().warnings.is_empty());
    }

    #[test]
    fn positive_part_collapses() {
        let (fm, sm) = pair();
        assert_eq!(positive_stein(&fm, &sm, 1.5, 5).unwrap().beta, sm);
        assert_eq!(positive_stein(&fm, &sm, 9.0, 5).unwrap().beta, stein(&fm, &sm, 9.0, 5).unwrap().beta);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("ps".parse::<EstimatorKind>().unwrap(), EstimatorKind::PS);
        assert!("xx".parse::<EstimatorKind>().is_err());
    }
}

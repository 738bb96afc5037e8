//! Asymptotic covariance ingredients for quantile coefficients under serially
//! dependent errors: the design moment `D₀`, the Bartlett-kernel long-run
//! score matrix `Â`, the sparsity scale `ω²`, and the partitioned sandwich.
//!
//! Two conventions coexist. The sandwich `Γ = D₀⁻¹ÂD₀⁻¹` is the covariance of
//! `√n(β̂ − β)` up to the factor `1/f²`. The precision form
//! `Λ = τ(1−τ)Γ⁻¹` satisfies `Cov(√n β̂) ≈ ω²Λ⁻¹`, so that with iid errors
//! `Λ = D₀`. Wald statistics and risk expressions are written in `Λ`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::data::{Dataset, PartitionSpec};
use crate::error::{check_tau, Error, Result};
use crate::linalg::{quantile_sorted, schur_complement, sorted_copy, spd_inverse, submatrix, symmetrize};
use crate::quantile::{psi, QuantileFit};

/// `(1/n) Z'Z` for the design `Z` (intercept column included when fitted).
pub fn estimate_d0(data: &Dataset) -> DMatrix<f64> {
    let z = data.design();
    symmetrize(&(z.transpose() * &z / data.n() as f64))
}

/// Hall–Sheather bandwidth in probability units.
pub fn hall_sheather_bandwidth(n: usize, tau: f64) -> f64 {
    let std = Normal::standard();
    let z = std.inverse_cdf(tau);
    let z_alpha = std.inverse_cdf(0.975);
    let phi = std.pdf(z);
    (n as f64).powf(-1.0 / 3.0)
        * z_alpha.powf(2.0 / 3.0)
        * (1.5 * phi * phi / (2.0 * z * z + 1.0)).powf(1.0 / 3.0)
}

fn quantile_window(sorted: &[f64], tau: f64) -> Result<(f64, f64)> {
    let h = hall_sheather_bandwidth(sorted.len(), tau);
    let lo = (tau - h).max(0.0);
    let hi = (tau + h).min(1.0);
    if hi <= lo {
        return Err(Error::Sparsity("bandwidth window is empty".into()));
    }
    let spread = quantile_sorted(sorted, hi) - quantile_sorted(sorted, lo);
    Ok((hi - lo, spread))
}

/// Sparsity scale `ω² = τ(1−τ)/f̂²`, with `f̂` a difference quotient of the
/// residual quantile function over the Hall–Sheather window.
///
/// Exact zeros (the observations interpolated by a quantile fit) are left
/// out: they pile up at the τ-quantile and would compress the spacing.
pub fn estimate_sparsity(residuals: &DVector<f64>, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if residuals.len() < 20 {
        return Err(Error::Sparsity(format!("need at least 20 residuals, got {}", residuals.len())));
    }
    let nonzero: Vec<f64> = residuals.iter().copied().filter(|&r| r != 0.0).collect();
    if nonzero.len() < 2 {
        return Err(Error::Sparsity("residuals have no spread".into()));
    }
    let sorted = sorted_copy(&nonzero);
    let (width, spread) = quantile_window(&sorted, tau)?;
    if !(spread > 0.0) {
        return Err(Error::Sparsity("residuals have no spread in the density window".into()));
    }
    let density = width / spread;
    if !(density > 1e-12) || !density.is_finite() {
        return Err(Error::Sparsity(format!("density estimate {density:e} is degenerate")));
    }
    Ok(tau * (1.0 - tau) / (density * density))
}

/// Newey–West rule `⌊4(n/100)^(2/9)⌋`.
pub fn default_bandwidth(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Bartlett-kernel estimate of the long-run covariance of `ψ_τ(rᵢ)zᵢ`.
pub fn estimate_a_hac(
    data: &Dataset,
    residuals: &DVector<f64>,
    tau: f64,
    bandwidth: Option<usize>,
) -> Result<DMatrix<f64>> {
    check_tau(tau)?;
    let n = data.n();
    if residuals.len() != n {
        return Err(Error::Dimension(format!("{} residuals for {} rows", residuals.len(), n)));
    }
    let lag_max = bandwidth.unwrap_or_else(|| default_bandwidth(n));
    if lag_max >= n {
        return Err(Error::InvalidArgument(format!("bandwidth {lag_max} must be below n = {n}")));
    }
    let z = data.design();
    let k = z.ncols();
    let mut scores = z;
    for i in 0..n {
        let s = psi(residuals[i], tau);
        scores.row_mut(i).scale_mut(s);
    }
    let mut a = scores.transpose() * &scores;
    for lag in 1..=lag_max {
        let w = 1.0 - lag as f64 / (lag_max as f64 + 1.0);
        let lead = scores.rows(lag, n - lag);
        let base = scores.rows(0, n - lag);
        let g = lead.transpose() * base;
        a += (&g + g.transpose()) * w;
    }
    debug_assert_eq!(a.nrows(), k);
    Ok(symmetrize(&(a / n as f64)))
}

/// Density-weighted design `D₁ = (1/n)Σ f̂ᵢ zᵢzᵢ'` with a uniform (Powell)
/// kernel whose half-width is the Hall–Sheather residual quantile spread.
pub fn estimate_d1(data: &Dataset, residuals: &DVector<f64>, tau: f64) -> Result<DMatrix<f64>> {
    check_tau(tau)?;
    let sorted = sorted_copy(residuals.as_slice());
    let (_, spread) = quantile_window(&sorted, tau)?;
    let c = 0.5 * spread;
    if !(c > 0.0) {
        return Err(Error::Sparsity("zero kernel half-width".into()));
    }
    let z = data.design();
    let mut d1 = DMatrix::zeros(z.ncols(), z.ncols());
    for i in 0..data.n() {
        if residuals[i].abs() <= c {
            let row = z.row(i);
            d1 += row.transpose() * row;
        }
    }
    Ok(symmetrize(&(d1 / (2.0 * c * data.n() as f64))))
}

/// Partitioned sandwich and precision matrices in `(keep, test)` order.
#[derive(Debug, Clone, Serialize)]
pub struct GammaBlocks {
    /// Coefficient indices in block order: retained block first.
    pub order: Vec<usize>,
    pub p1: usize,
    /// `D₀⁻¹ÂD₀⁻¹`, reordered.
    pub gamma: DMatrix<f64>,
    pub gamma_11: DMatrix<f64>,
    pub gamma_12: DMatrix<f64>,
    pub gamma_21: DMatrix<f64>,
    pub gamma_22: DMatrix<f64>,
    /// `Γ₂₂ − Γ₂₁Γ₁₁⁻¹Γ₁₂`.
    pub gamma_22_1: DMatrix<f64>,
    /// `τ(1−τ)Γ⁻¹`, reordered.
    pub precision: DMatrix<f64>,
    /// Schur complement of the precision; the Wald weight of the tested block.
    pub precision_22_1: DMatrix<f64>,
}

/// Assemble `Γ = D₀⁻¹ÂD₀⁻¹` and its blocks. `keep` and `test` are coefficient
/// (design-column) indices.
pub fn build_gamma(
    d0: &DMatrix<f64>,
    a_hat: &DMatrix<f64>,
    tau: f64,
    keep: &[usize],
    test: &[usize],
) -> Result<GammaBlocks> {
    check_tau(tau)?;
    let k = d0.nrows();
    if d0.ncols() != k || a_hat.shape() != (k, k) {
        return Err(Error::Dimension("D0 and A must be square of equal size".into()));
    }
    let mut order: Vec<usize> = keep.to_vec();
    order.extend_from_slice(test);
    let mut seen = vec![false; k];
    for &j in &order {
        if j >= k || seen[j] {
            return Err(Error::InvalidArgument(format!("bad block index {j}")));
        }
        seen[j] = true;
    }
    if order.len() != k {
        return Err(Error::InvalidArgument("blocks must cover every coefficient".into()));
    }
    let d0_inv = spd_inverse(d0, "D0")?;
    let full = symmetrize(&(&d0_inv * a_hat * &d0_inv));
    let gamma = submatrix(&full, &order, &order);
    let p1 = keep.len();
    let b1: Vec<usize> = (0..p1).collect();
    let b2: Vec<usize> = (p1..k).collect();
    if p1 > 0 {
        spd_inverse(&submatrix(&gamma, &b1, &b1), "Gamma_11")?;
    }
    let gamma_22_1 = schur_complement(&gamma, &b1, &b2)?;
    let precision = spd_inverse(&gamma, "Gamma")? * (tau * (1.0 - tau));
    let precision = symmetrize(&precision);
    let precision_22_1 = schur_complement(&precision, &b1, &b2)?;
    Ok(GammaBlocks {
        gamma_11: submatrix(&gamma, &b1, &b1),
        gamma_12: submatrix(&gamma, &b1, &b2),
        gamma_21: submatrix(&gamma, &b2, &b1),
        gamma_22: submatrix(&gamma, &b2, &b2),
        order,
        p1,
        gamma,
        gamma_22_1,
        precision,
        precision_22_1,
    })
}

/// Ratio of the extreme eigenvalues of a symmetric matrix.
pub(crate) fn eigen_ratio(m: &DMatrix<f64>) -> f64 {
    let ev = m.clone().symmetric_eigenvalues();
    let max = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CovarianceOptions {
    /// HAC lag truncation; Newey–West rule when `None`.
    pub bandwidth: Option<usize>,
    pub with_d1: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceEstimate {
    pub tau: f64,
    pub n: usize,
    pub d0: DMatrix<f64>,
    pub d1: Option<DMatrix<f64>>,
    pub a_hat: DMatrix<f64>,
    pub omega_sq: f64,
    pub bandwidth: usize,
    /// Eigenvalue ratio of `D₀`; values above `1e8` signal near-collinearity.
    pub d0_condition: f64,
    pub blocks: GammaBlocks,
}

/// All covariance ingredients from a full-model fit at level `fit.tau`.
pub fn estimate_covariance(
    data: &Dataset,
    fit: &QuantileFit,
    partition: &PartitionSpec,
    opts: CovarianceOptions,
) -> Result<CovarianceEstimate> {
    partition.check_against(data)?;
    let tau = fit.tau;
    let d0 = estimate_d0(data);
    let bandwidth = opts.bandwidth.unwrap_or_else(|| default_bandwidth(data.n()));
    let a_hat = estimate_a_hac(data, &fit.residuals, tau, Some(bandwidth))?;
    let omega_sq = estimate_sparsity(&fit.residuals, tau)?;
    let d1 = if opts.with_d1 {
        Some(estimate_d1(data, &fit.residuals, tau)?)
    } else {
        None
    };
    let intercept = data.has_intercept();
    let blocks = build_gamma(&d0, &a_hat, tau, &partition.keep_coef(intercept), &partition.test_coef(intercept))?;
    Ok(CovarianceEstimate {
        tau,
        n: data.n(),
        d0_condition: eigen_ratio(&d0),
        d0,
        d1,
        a_hat,
        omega_sq,
        bandwidth,
        blocks,
    })
}

//! Asymptotic distributional risk of the five estimators of the retained
//! coefficients under local alternatives `β₂ = γ/√n`.
//!
//! Throughout, `Γ` is the precision-type matrix of the limit law:
//! `√n(β̂ − β) → N(0, ω²Γ⁻¹)`. With `B = Γ₁₁⁻¹Γ₁₂`, `δ = Bγ`,
//! `Φ = BΓ₂₂.₁⁻¹B'` and `Δ = ω⁻²γ'Γ₂₂.₁γ`, every estimator has the form
//! `β̂₁ − g(𝒲)(β̂₁ − β̃₁)` and its weighted quadratic risk reduces to
//!
//! ```text
//!   R = ω²tr(WΓ₁₁.₂⁻¹) − ω²tr(WΦ)(1 − E[k²(χ²_{p₂+2}(Δ))])
//!       + δ'Wδ (1 − 2E[k(χ²_{p₂+2}(Δ))] + E[k²(χ²_{p₂+4}(Δ))]),   k = 1 − g.
//! ```

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use std::collections::BTreeMap;

use crate::covariance::CovarianceEstimate;
use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, submatrix, symmetrize};
use crate::ncchisq::{expect_inv_ncchisq, ncchisq_cdf, truncated_moment};
use crate::shrinkage::EstimatorKind;
use crate::special::chisq_critical;

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticParams {
    pub p1: usize,
    pub p2: usize,
    pub gamma_11: DMatrix<f64>,
    pub gamma_12: DMatrix<f64>,
    pub gamma_21: DMatrix<f64>,
    pub gamma_22: DMatrix<f64>,
    pub gamma_11_inv: DMatrix<f64>,
    pub gamma_22_1: DMatrix<f64>,
    /// `(Γ₁₁ − Γ₁₂Γ₂₂⁻¹Γ₂₁)⁻¹`, the retained block of `Γ⁻¹`.
    pub gamma_11_2_inv: DMatrix<f64>,
    pub omega_sq: f64,
    pub gamma_vec: DVector<f64>,
    pub delta_vec: DVector<f64>,
    pub phi: DMatrix<f64>,
    /// `−Γ₁₂Γ₂₁Γ₁₁⁻¹`, kept for reference alongside `sigma_star`.
    pub sigma_12: DMatrix<f64>,
    pub sigma_21: DMatrix<f64>,
    /// `Σ₂₁ + ω²Γ₁₁.₂⁻¹`.
    pub sigma_star: DMatrix<f64>,
    pub weight: DMatrix<f64>,
    pub noncentrality: f64,
    full_inv: DMatrix<f64>,
}

impl AsymptoticParams {
    /// `gamma` is the full `(p₁+p₂)`-square precision matrix with the retained
    /// block first; `weight` is `p₁ × p₁` positive definite.
    pub fn new(
        gamma: &DMatrix<f64>,
        p1: usize,
        omega_sq: f64,
        gamma_vec: DVector<f64>,
        weight: DMatrix<f64>,
    ) -> Result<Self> {
        let p = gamma.nrows();
        if gamma.ncols() != p || p1 == 0 || p1 >= p {
            return Err(Error::Dimension(format!("Gamma is {}x{}, p1 = {p1}", gamma.nrows(), gamma.ncols())));
        }
        let p2 = p - p1;
        if gamma_vec.len() != p2 {
            return Err(Error::Dimension(format!("gamma_vec has length {}, p2 = {p2}", gamma_vec.len())));
        }
        if weight.shape() != (p1, p1) {
            return Err(Error::Dimension(format!("weight must be {p1}x{p1}")));
        }
        if !(omega_sq > 0.0 && omega_sq.is_finite()) {
            return Err(Error::InvalidArgument(format!("omega_sq {omega_sq} must be positive")));
        }
        let gamma = symmetrize(gamma);
        if gamma.clone().cholesky().is_none() {
            return Err(Error::Singular("Gamma is not positive definite".into()));
        }
        if symmetrize(&weight).cholesky().is_none() {
            return Err(Error::InvalidArgument("weight matrix is not positive definite".into()));
        }
        let b1: Vec<usize> = (0..p1).collect();
        let b2: Vec<usize> = (p1..p).collect();
        let g11 = submatrix(&gamma, &b1, &b1);
        let g12 = submatrix(&gamma, &b1, &b2);
        let g22 = submatrix(&gamma, &b2, &b2);
        let g11_inv = spd_inverse(&g11, "Gamma_11")?;
        let g22_1 = symmetrize(&(&g22 - g12.transpose() * &g11_inv * &g12));
        let g22_1_inv = spd_inverse(&g22_1, "Gamma_22.1")?;
        let full_inv = spd_inverse(&gamma, "Gamma")?;
        let b = &g11_inv * &g12;
        let phi = symmetrize(&(&b * &g22_1_inv * b.transpose()));
        let delta_vec = &b * &gamma_vec;
        let noncentrality = (gamma_vec.dot(&(&g22_1 * &gamma_vec)) / omega_sq).max(0.0);
        let sigma_12 = -(&g12 * g12.transpose() * &g11_inv);
        let sigma_21 = sigma_12.transpose();
        let gamma_11_2_inv = submatrix(&full_inv, &b1, &b1);
        let sigma_star = &sigma_21 + &gamma_11_2_inv * omega_sq;
        Ok(AsymptoticParams {
            p1,
            p2,
            gamma_21: g12.transpose(),
            gamma_11: g11,
            gamma_12: g12,
            gamma_22: g22,
            gamma_11_inv: g11_inv,
            gamma_22_1: g22_1,
            gamma_11_2_inv,
            omega_sq,
            gamma_vec,
            delta_vec,
            phi,
            sigma_12,
            sigma_21,
            sigma_star,
            weight: symmetrize(&weight),
            noncentrality,
            full_inv,
        })
    }

    /// Parameters implied by an estimated covariance, using its precision form.
    pub fn from_covariance(cov: &CovarianceEstimate, gamma_vec: DVector<f64>, weight: DMatrix<f64>) -> Result<Self> {
        Self::new(&cov.blocks.precision, cov.blocks.p1, cov.omega_sq, gamma_vec, weight)
    }

    pub fn with_gamma_vec(&self, gamma_vec: DVector<f64>) -> Result<Self> {
        Self::new(&self.full_gamma(), self.p1, self.omega_sq, gamma_vec, self.weight.clone())
    }

    pub fn full_gamma(&self) -> DMatrix<f64> {
        let p = self.p1 + self.p2;
        let mut g = DMatrix::zeros(p, p);
        g.view_mut((0, 0), (self.p1, self.p1)).copy_from(&self.gamma_11);
        g.view_mut((0, self.p1), (self.p1, self.p2)).copy_from(&self.gamma_12);
        g.view_mut((self.p1, 0), (self.p2, self.p1)).copy_from(&self.gamma_21);
        g.view_mut((self.p1, self.p1), (self.p2, self.p2)).copy_from(&self.gamma_22);
        g
    }

    fn trace_w(&self, m: &DMatrix<f64>) -> f64 {
        (&self.weight * m).trace()
    }

    fn weighted_bias(&self) -> f64 {
        self.delta_vec.dot(&(&self.weight * &self.delta_vec))
    }
}

/// `E[k(X)]` at df `p₂+2`, `E[k²(X)]` at df `p₂+2` and at df `p₂+4`.
struct KernelMoments {
    k1_lo: f64,
    k2_lo: f64,
    k2_hi: f64,
}

fn kernel_moments(kind: EstimatorKind, p2: usize, delta: f64, alpha_level: f64) -> Result<KernelMoments> {
    let q = p2 as f64;
    let (lo, hi) = (q + 2.0, q + 4.0);
    match kind {
        EstimatorKind::FM => Ok(KernelMoments { k1_lo: 1.0, k2_lo: 1.0, k2_hi: 1.0 }),
        EstimatorKind::SM => Ok(KernelMoments { k1_lo: 0.0, k2_lo: 0.0, k2_hi: 0.0 }),
        EstimatorKind::PT => {
            if !(alpha_level > 0.0 && alpha_level < 1.0) {
                return Err(Error::InvalidArgument(format!("alpha {alpha_level} is outside (0, 1)")));
            }
            let c = chisq_critical(alpha_level, q);
            let s_lo = 1.0 - ncchisq_cdf(c, lo, delta);
            let s_hi = 1.0 - ncchisq_cdf(c, hi, delta);
            Ok(KernelMoments { k1_lo: s_lo, k2_lo: s_lo, k2_hi: s_hi })
        }
        EstimatorKind::S | EstimatorKind::PS => {
            if p2 < 3 {
                return Err(Error::InvalidArgument(format!(
                    "Stein-type risk requires p2 >= 3 (d = p2 - 2 >= 1), got p2 = {p2}"
                )));
            }
            let d = q - 2.0;
            let e = |df: f64, m: u32| expect_inv_ncchisq(df, delta, m);
            if kind == EstimatorKind::S {
                return Ok(KernelMoments {
                    k1_lo: 1.0 - d * e(lo, 1)?,
                    k2_lo: 1.0 - 2.0 * d * e(lo, 1)? + d * d * e(lo, 2)?,
                    k2_hi: 1.0 - 2.0 * d * e(hi, 1)? + d * d * e(hi, 2)?,
                });
            }
            // k(x) = (1 − d/x)·I(x > d): subtract the truncated pieces below d
            let upper = |df: f64, m: u32| -> Result<f64> { Ok(e(df, m)? - truncated_moment(df, delta, d, m)?) };
            let mass = |df: f64| 1.0 - ncchisq_cdf(d, df, delta);
            Ok(KernelMoments {
                k1_lo: mass(lo) - d * upper(lo, 1)?,
                k2_lo: mass(lo) - 2.0 * d * upper(lo, 1)? + d * d * upper(lo, 2)?,
                k2_hi: mass(hi) - 2.0 * d * upper(hi, 1)? + d * d * upper(hi, 2)?,
            })
        }
    }
}

/// Closed-form asymptotic risk `E[ϑ'Wϑ]` of the requested estimator.
/// `alpha_level` is used by the pretest estimator only.
pub fn risk(kind: EstimatorKind, params: &AsymptoticParams, alpha_level: f64) -> Result<f64> {
    let fm = params.omega_sq * params.trace_w(&params.gamma_11_2_inv);
    let phi_term = params.omega_sq * params.trace_w(&params.phi);
    let bias = params.weighted_bias();
    let m = kernel_moments(kind, params.p2, params.noncentrality, alpha_level)?;
    let r = match kind {
        EstimatorKind::FM => fm,
        EstimatorKind::SM => params.omega_sq * params.trace_w(&params.gamma_11_inv) + bias,
        _ => fm - phi_term * (1.0 - m.k2_lo) + bias * (1.0 - 2.0 * m.k1_lo + m.k2_hi),
    };
    Ok(r.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McRisk {
    pub estimate: f64,
    pub std_error: f64,
}

/// Monte Carlo risk of all five estimators from common draws of the limit
/// experiment: `θ ~ N(0, ω²Γ⁻¹)`, `U = θ₂ + γ`, `ϑ₁ = θ₁`, the restricted
/// limit `ϑ₁ + BU`, and `𝒲 = ω⁻²U'Γ₂₂.₁U`.
pub fn mc_risk_all(
    params: &AsymptoticParams,
    alpha_level: f64,
    n_draws: usize,
    seed: u64,
) -> Result<BTreeMap<EstimatorKind, McRisk>> {
    if n_draws < 10_000 {
        return Err(Error::InvalidArgument(format!("n_draws {n_draws} must be at least 10^4")));
    }
    let (p1, p2) = (params.p1, params.p2);
    let p = p1 + p2;
    let cov = symmetrize(&(&params.full_inv * params.omega_sq));
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::Singular("limit covariance is not positive semidefinite".into()))?;
    let l = chol.l();
    let b = &params.gamma_11_inv * &params.gamma_12;
    let g22_1 = &params.gamma_22_1;
    let w = &params.weight;
    let d = p2 as f64 - 2.0;
    let c = if alpha_level > 0.0 && alpha_level < 1.0 {
        chisq_critical(alpha_level, p2 as f64)
    } else {
        return Err(Error::InvalidArgument(format!("alpha {alpha_level} is outside (0, 1)")));
    };
    let stein_ok = p2 >= 3;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![0.0; p];
    let mut theta = vec![0.0; p];
    let mut bu = vec![0.0; p1];
    let mut e = vec![0.0; p1];
    let mut sum = [0.0f64; 5];
    let mut sum_sq = [0.0f64; 5];
    let quad = |v: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..p1 {
            let mut row = 0.0;
            for j in 0..p1 {
                row += w[(i, j)] * v[j];
            }
            s += v[i] * row;
        }
        s
    };
    for _ in 0..n_draws {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        for i in 0..p {
            let mut s = 0.0;
            for j in 0..=i {
                s += l[(i, j)] * z[j];
            }
            theta[i] = s;
        }
        for j in 0..p2 {
            theta[p1 + j] += params.gamma_vec[j];
        }
        let u = &theta[p1..];
        let mut wald = 0.0;
        for i in 0..p2 {
            let mut row = 0.0;
            for j in 0..p2 {
                row += g22_1[(i, j)] * u[j];
            }
            wald += u[i] * row;
        }
        wald /= params.omega_sq;
        for i in 0..p1 {
            let mut s = 0.0;
            for j in 0..p2 {
                s += b[(i, j)] * u[j];
            }
            bu[i] = s;
        }
        let gs = [
            0.0,
            1.0,
            if wald < c { 1.0 } else { 0.0 },
            if stein_ok { d / wald } else { f64::NAN },
            if stein_ok { (d / wald).min(1.0) } else { f64::NAN },
        ];
        for (slot, g) in gs.iter().enumerate() {
            for i in 0..p1 {
                e[i] = theta[i] + g * bu[i];
            }
            let loss = quad(&e);
            sum[slot] += loss;
            sum_sq[slot] += loss * loss;
        }
    }
    let nf = n_draws as f64;
    let mut out = BTreeMap::new();
    for (slot, kind) in EstimatorKind::ALL.iter().enumerate() {
        if !stein_ok && matches!(kind, EstimatorKind::S | EstimatorKind::PS) {
            continue;
        }
        let mean = sum[slot] / nf;
        let var = (sum_sq[slot] / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
        out.insert(
            *kind,
            McRisk {
                estimate: mean,
                std_error: (var / nf).sqrt(),
            },
        );
    }
    Ok(out)
}

/// Monte Carlo risk of a single estimator, `(estimate, standard error)`.
pub fn mc_risk_oracle(
    kind: EstimatorKind,
    params: &AsymptoticParams,
    alpha_level: f64,
    n_draws: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let all = mc_risk_all(params, alpha_level, n_draws, seed)?;
    let r = all
        .get(&kind)
        .ok_or_else(|| Error::InvalidArgument(format!("{} risk needs p2 >= 3", kind.name())))?;
    Ok((r.estimate, r.std_error))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskPoint {
    pub noncentrality: f64,
    pub risks: BTreeMap<EstimatorKind, f64>,
}

/// Risks along `γ = s·γ₀` with `s` chosen so that `Δ` hits each grid value.
pub fn risk_curve(
    template: &AsymptoticParams,
    kinds: &[EstimatorKind],
    grid: &[f64],
    alpha_level: f64,
) -> Result<Vec<RiskPoint>> {
    if grid.is_empty() {
        return Err(Error::Empty("noncentrality grid".into()));
    }
    if grid.iter().any(|&g| !(g >= 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("grid must be nonnegative and increasing".into()));
    }
    let base = template.noncentrality;
    if !(base > 0.0) {
        return Err(Error::InvalidArgument("direction vector gamma is zero".into()));
    }
    grid.iter()
        .map(|&target| {
            let scale = (target / base).sqrt();
            let params = template.with_gamma_vec(&template.gamma_vec * scale)?;
            let mut risks = BTreeMap::new();
            for &k in kinds {
                risks.insert(k, risk(k, &params, alpha_level)?);
            }
            Ok(RiskPoint {
                noncentrality: target,
                risks,
            })
        })
        .collect()
}

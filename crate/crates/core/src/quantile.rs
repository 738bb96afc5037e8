//! Check-loss minimization for full and restricted linear quantile models,
//! plus the least-squares baseline.
//!
//! The linear program
//!
//! ```text
//!   min  τ·1'u + (1−τ)·1'v   s.t.  Zβ + u − v = y,  u, v ≥ 0
//! ```
//!
//! is solved by a Mehrotra predictor–corrector interior-point iteration on the
//! bounded dual `max y'a  s.t. Z'a = (1−τ)Z'1, 0 ≤ a ≤ 1`. The interior
//! solution is then pushed onto a vertex: `k` observations with the smallest
//! residuals are interpolated and simplex-type exchange steps are taken until
//! the dual certificate `c = −Z_h'^{-1} Σ_{i∉h} ψ_τ(rᵢ) zᵢ ∈ [τ−1, τ]^k` holds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, PartitionSpec};
use crate::error::{check_tau, Error, Result};
use crate::linalg::{dependent_columns, spd_inverse};

/// Check loss `ρ_τ(u) = u(τ − I(u < 0))`.
pub fn check_loss(u: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(rho(u, tau))
}

#[inline]
pub(crate) fn rho(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        (tau - 1.0) * u
    } else {
        tau * u
    }
}

/// Quantile score `ψ_τ(u) = τ − I(u < 0)`.
#[inline]
pub fn psi(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        tau - 1.0
    } else {
        tau
    }
}

pub fn total_check_loss(residuals: &DVector<f64>, tau: f64) -> f64 {
    residuals.iter().map(|&r| rho(r, tau)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverStatus {
    Converged,
    IterationLimit,
    /// Free block rank deficient; dependent columns were pinned at zero.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileFit {
    pub tau: f64,
    /// Full-length coefficients, intercept first when fitted.
    pub beta: DVector<f64>,
    pub residuals: DVector<f64>,
    pub objective: f64,
    pub status: SolverStatus,
    /// Some certificate component sits on the boundary of `[τ−1, τ]`, so the
    /// minimizer is not unique.
    pub multiple_optima: bool,
    /// Observations interpolated by the returned vertex (free-block design rows).
    pub basis: Vec<usize>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_ipm_iter: usize,
    pub gap_tol: f64,
    pub max_pivots: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_ipm_iter: 100,
            gap_tol: 1e-8,
            max_pivots: 10_000,
        }
    }
}

/// Fit the τ-th linear quantile. With a partition, the tested coefficients
/// are fixed at zero and only the retained block (and intercept) is free.
pub fn fit_quantile(data: &Dataset, tau: f64, partition: Option<&PartitionSpec>) -> Result<QuantileFit> {
    fit_quantile_with(data, tau, partition, SolverOptions::default())
}

pub fn fit_quantile_with(
    data: &Dataset,
    tau: f64,
    partition: Option<&PartitionSpec>,
    opts: SolverOptions,
) -> Result<QuantileFit> {
    check_tau(tau)?;
    let free: Vec<usize> = match partition {
        Some(part) => {
            part.check_against(data)?;
            part.keep_coef(data.has_intercept())
        }
        None => (0..data.n_coef()).collect(),
    };
    let z = data.design_columns(&free);
    let y = data.y();

    let dropped = dependent_columns(&z, 1e-10);
    let (z_used, used_idx): (DMatrix<f64>, Vec<usize>) = if dropped.is_empty() {
        (z, (0..free.len()).collect())
    } else {
        let keep: Vec<usize> = (0..free.len()).filter(|j| !dropped.contains(j)).collect();
        (DMatrix::from_fn(data.n(), keep.len(), |i, c| z[(i, keep[c])]), keep)
    };

    let sol = solve_lp(&z_used, y, tau, &opts);
    let mut beta = DVector::zeros(data.n_coef());
    for (c, &j) in used_idx.iter().enumerate() {
        beta[free[j]] = sol.beta[c];
    }
    let mut residuals = y - &z_used * &sol.beta;
    // interpolated rows sit exactly on the fit; round-off must not flip their score sign
    for &i in &sol.basis {
        residuals[i] = 0.0;
    }
    let objective = total_check_loss(&residuals, tau);
    let status = if !dropped.is_empty() {
        SolverStatus::Degenerate
    } else if sol.hit_limit {
        SolverStatus::IterationLimit
    } else {
        SolverStatus::Converged
    };
    Ok(QuantileFit {
        tau,
        beta,
        residuals,
        objective,
        status,
        multiple_optima: sol.multiple,
        basis: sol.basis,
        iterations: sol.iterations,
    })
}

pub(crate) struct LpSolution {
    pub beta: DVector<f64>,
    pub basis: Vec<usize>,
    pub multiple: bool,
    pub hit_limit: bool,
    pub iterations: usize,
}

/// Exact check-loss regression of `y` on the full-rank design `z`.
pub(crate) fn solve_lp(z: &DMatrix<f64>, y: &DVector<f64>, tau: f64, opts: &SolverOptions) -> LpSolution {
    let (n, k) = z.shape();
    if k == 0 {
        return LpSolution {
            beta: DVector::zeros(0),
            basis: Vec::new(),
            multiple: false,
            hit_limit: false,
            iterations: 0,
        };
    }
    let (beta_ipm, ipm_iter) = interior_point(z, y, tau, opts);
    let resid = y - z * &beta_ipm;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| resid[a].abs().total_cmp(&resid[b].abs()).then(a.cmp(&b)));
    let basis = independent_rows(z, &order);
    let mut sol = simplex_polish(z, y, tau, basis, opts.max_pivots);
    sol.iterations += ipm_iter;
    sol
}

/// Mehrotra predictor–corrector on the bounded dual. Returns the primal
/// coefficients and the iteration count.
fn interior_point(z: &DMatrix<f64>, y: &DVector<f64>, tau: f64, opts: &SolverOptions) -> (DVector<f64>, usize) {
    let (n, k) = z.shape();
    let nf = n as f64;
    let zt = z.transpose();

    let mut beta = {
        let ztz = &zt * z;
        match ztz.cholesky() {
            Some(ch) => ch.solve(&(&zt * y)),
            None => DVector::zeros(k),
        }
    };
    let r0 = y - z * &beta;
    let spread = r0.iter().map(|v| v.abs()).sum::<f64>() / nf;
    let delta = (0.5 * spread).max(1e-8 * (1.0 + y.amax()));
    let mut u = r0.map(|r| r.max(0.0) + delta);
    let mut v = r0.map(|r| (-r).max(0.0) + delta);
    let mut a = DVector::from_element(n, 1.0 - tau);
    let b = &zt * DVector::from_element(n, 1.0 - tau);

    let step = |x: &DVector<f64>, dx: &DVector<f64>| -> f64 {
        x.iter()
            .zip(dx.iter())
            .filter(|(_, &d)| d < 0.0)
            .map(|(&xi, &d)| -xi / d)
            .fold(f64::INFINITY, f64::min)
    };
    let dual_step = |a: &DVector<f64>, da: &DVector<f64>| -> f64 {
        a.iter()
            .zip(da.iter())
            .map(|(&ai, &d)| {
                if d < 0.0 {
                    -ai / d
                } else if d > 0.0 {
                    (1.0 - ai) / d
                } else {
                    f64::INFINITY
                }
            })
            .fold(f64::INFINITY, f64::min)
    };

    let mut it = 0;
    while it < opts.max_ipm_iter {
        it += 1;
        let s = a.map(|ai| 1.0 - ai);
        let r_p = &b - &zt * &a;
        let r_d = y - z * &beta - &u + &v;
        let gap = u.dot(&s) + v.dot(&a);
        let primal = tau * u.sum() + (1.0 - tau) * v.sum();
        let rd_norm = r_d.amax();
        if gap <= opts.gap_tol * (1.0 + primal.abs()) && rd_norm <= 1e-8 * (1.0 + y.amax()) {
            break;
        }
        let mu = gap / (2.0 * nf);
        let q = DVector::from_fn(n, |i, _| u[i] / s[i] + v[i] / a[i]);

        let solve = |c_u: &DVector<f64>, c_v: &DVector<f64>| -> Option<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> {
            let rho_vec = DVector::from_fn(n, |i, _| r_d[i] - c_u[i] / s[i] + c_v[i] / a[i]);
            let mut m = DMatrix::zeros(k, k);
            let mut rhs = -&r_p;
            for i in 0..n {
                let w = 1.0 / q[i];
                let zi = z.row(i);
                for c1 in 0..k {
                    let zc1 = zi[c1] * w;
                    rhs[c1] += zc1 * rho_vec[i];
                    for c2 in c1..k {
                        m[(c1, c2)] += zc1 * zi[c2];
                    }
                }
            }
            for c1 in 0..k {
                for c2 in 0..c1 {
                    m[(c1, c2)] = m[(c2, c1)];
                }
            }
            let dbeta = m.cholesky()?.solve(&rhs);
            let zdb = z * &dbeta;
            let da = DVector::from_fn(n, |i, _| (rho_vec[i] - zdb[i]) / q[i]);
            let du = DVector::from_fn(n, |i, _| (c_u[i] + u[i] * da[i]) / s[i]);
            let dv = DVector::from_fn(n, |i, _| (c_v[i] - v[i] * da[i]) / a[i]);
            Some((dbeta, da, du, dv))
        };

        // predictor
        let c_u = DVector::from_fn(n, |i, _| -u[i] * s[i]);
        let c_v = DVector::from_fn(n, |i, _| -v[i] * a[i]);
        let Some((_, da_aff, du_aff, dv_aff)) = solve(&c_u, &c_v) else {
            break;
        };
        let ap = step(&u, &du_aff).min(step(&v, &dv_aff)).min(1.0);
        let ad = dual_step(&a, &da_aff).min(1.0);
        let mut gap_aff = 0.0;
        for i in 0..n {
            let ui = u[i] + ap * du_aff[i];
            let vi = v[i] + ap * dv_aff[i];
            let ai = a[i] + ad * da_aff[i];
            gap_aff += ui * (1.0 - ai) + vi * ai;
        }
        let sigma = (gap_aff / gap).clamp(0.0, 1.0).powi(3);

        // corrector
        let c_u = DVector::from_fn(n, |i, _| sigma * mu - u[i] * s[i] + du_aff[i] * da_aff[i]);
        let c_v = DVector::from_fn(n, |i, _| sigma * mu - v[i] * a[i] - dv_aff[i] * da_aff[i]);
        let Some((dbeta, da, du, dv)) = solve(&c_u, &c_v) else {
            break;
        };
        let ap = (0.99995 * step(&u, &du).min(step(&v, &dv))).min(1.0);
        let ad = (0.99995 * dual_step(&a, &da)).min(1.0);
        beta += &dbeta * ap;
        u += &du * ap;
        v += &dv * ap;
        a += &da * ad;
    }
    (beta, it)
}

/// Greedily pick `k` linearly independent rows in the given priority order.
fn independent_rows(z: &DMatrix<f64>, order: &[usize]) -> Vec<usize> {
    let k = z.ncols();
    let mut basis_rows: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut chosen = Vec::with_capacity(k);
    for &i in order {
        if chosen.len() == k {
            break;
        }
        let mut v = z.row(i).transpose();
        let n0 = v.norm();
        if n0 == 0.0 {
            continue;
        }
        for q in &basis_rows {
            let c = q.dot(&v);
            v -= q * c;
        }
        let nv = v.norm();
        if nv > 1e-9 * n0 {
            basis_rows.push(v / nv);
            chosen.push(i);
        }
    }
    chosen
}

/// Exchange steps from an interpolating basis to an optimal vertex.
fn simplex_polish(z: &DMatrix<f64>, y: &DVector<f64>, tau: f64, mut basis: Vec<usize>, max_pivots: usize) -> LpSolution {
    let (n, k) = z.shape();
    let ztol = 1e-9 * (1.0 + y.amax());
    let ctol = 1e-9;
    let mut pivots = 0;
    let mut in_basis = vec![false; n];

    loop {
        let zh = DMatrix::from_fn(k, k, |r, c| z[(basis[r], c)]);
        let yh = DVector::from_fn(k, |r, _| y[basis[r]]);
        let lu = zh.clone().lu();
        let beta = lu.solve(&yh).unwrap_or_else(|| DVector::zeros(k));
        let zht_lu = zh.transpose().lu();
        in_basis.iter_mut().for_each(|f| *f = false);
        for &i in &basis {
            in_basis[i] = true;
        }
        let mut r = y - z * &beta;
        for &i in &basis {
            r[i] = 0.0;
        }

        let mut g = DVector::zeros(k);
        let mut degenerate = Vec::new();
        for i in 0..n {
            if in_basis[i] {
                continue;
            }
            if r[i].abs() <= ztol {
                degenerate.push(i);
            } else {
                g += z.row(i).transpose() * psi(r[i], tau);
            }
        }
        let c = zht_lu.solve(&(-&g)).unwrap_or_else(|| DVector::zeros(k));

        // candidate leaving positions ordered by violation
        let mut cands: Vec<(f64, usize, f64)> = Vec::new();
        for j in 0..k {
            if c[j] > tau + ctol {
                cands.push((c[j] - tau, j, -1.0));
            } else if c[j] < tau - 1.0 - ctol {
                cands.push((tau - 1.0 - c[j], j, 1.0));
            }
        }
        cands.sort_by(|a, b| b.0.total_cmp(&a.0));

        let mut moved = false;
        if pivots < max_pivots {
            for &(_, j, sigma) in &cands {
                let mut e = DVector::zeros(k);
                e[j] = sigma;
                let Some(dir) = lu.solve(&e) else { continue };
                let zd = z * &dir;
                // directional derivative at t = 0+
                let mut slope = if sigma > 0.0 { c[j] + 1.0 - tau } else { tau - c[j] };
                for &i in &degenerate {
                    slope += rho(-zd[i], tau);
                }
                if slope >= -1e-12 {
                    continue;
                }
                let mut bps: Vec<(f64, usize)> = (0..n)
                    .filter(|&i| !in_basis[i] && r[i].abs() > ztol && zd[i] != 0.0)
                    .filter_map(|i| {
                        let t = r[i] / zd[i];
                        (t > 0.0).then_some((t, i))
                    })
                    .collect();
                bps.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut entering = None;
                for &(_, i) in &bps {
                    slope += zd[i].abs();
                    if slope >= -1e-12 {
                        entering = Some(i);
                        break;
                    }
                }
                if let Some(i) = entering {
                    basis[j] = i;
                    pivots += 1;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            let optimal = cands.is_empty();
            let multiple = (0..k).any(|j| (c[j] - tau).abs() <= 1e-7 || (c[j] - (tau - 1.0)).abs() <= 1e-7);
            return LpSolution {
                beta,
                basis,
                multiple,
                hit_limit: !optimal && pivots >= max_pivots,
                iterations: pivots,
            };
        }
    }
}

/// Least-squares fit with the quantities needed for classical inference.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub beta: DVector<f64>,
    pub residuals: DVector<f64>,
    /// Residual variance with `n − k` degrees of freedom (NaN when `n = k`).
    pub sigma2: f64,
    /// `(Z'Z)⁻¹`.
    pub xtx_inv: DMatrix<f64>,
}

impl OlsFit {
    pub fn std_errors(&self) -> DVector<f64> {
        DVector::from_fn(self.beta.len(), |j, _| (self.sigma2 * self.xtx_inv[(j, j)]).sqrt())
    }
}

pub fn fit_ols(data: &Dataset) -> Result<OlsFit> {
    let z = data.design();
    let dropped = dependent_columns(&z, 1e-10);
    if !dropped.is_empty() {
        let labels = data.coef_labels();
        let names: Vec<&str> = dropped.iter().map(|&j| labels[j].as_str()).collect();
        return Err(Error::Singular(format!(
            "X'X is singular; collinear column(s): {}",
            names.join(", ")
        )));
    }
    let zt = z.transpose();
    let xtx_inv = spd_inverse(&(&zt * &z), "X'X")?;
    let beta = &xtx_inv * (&zt * data.y());
    let residuals = data.y() - &z * &beta;
    let dof = data.n() as f64 - z.ncols() as f64;
    let sigma2 = if dof > 0.0 {
        residuals.norm_squared() / dof
    } else {
        f64::NAN
    };
    Ok(OlsFit {
        beta,
        residuals,
        sigma2,
        xtx_inv,
    })
}

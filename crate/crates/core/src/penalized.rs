//! Elastic-net penalized quantile regression on a Huber-smoothed check loss.
//!
//! The objective is
//!
//! ```text
//!   (1/n) Σ ρ_h(yᵢ − b₀ − xᵢ'β) + λ (α‖β‖₁ + (1−α)/2 ‖β‖₂²)
//! ```
//!
//! where `ρ_h` replaces the kink of the check loss by a quadratic on `[−h, h]`.
//! Each coordinate update minimizes the convex piecewise-quadratic section
//! exactly by walking its sorted breakpoints, and every sweep is followed by a
//! Newton step on the active set with the same exact line search.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{check_tau, Error, Result};
use crate::linalg::{quantile_sorted, sorted_copy};
use crate::montecarlo::pmad;
use crate::quantile::psi;

/// Huber-smoothed check loss.
pub fn smoothed_loss(u: f64, tau: f64, h: f64) -> f64 {
    if u >= 0.0 {
        if u > h {
            tau * (u - 0.5 * h)
        } else {
            tau * u * u / (2.0 * h)
        }
    } else if u < -h {
        (1.0 - tau) * (-u - 0.5 * h)
    } else {
        (1.0 - tau) * u * u / (2.0 * h)
    }
}

/// Derivative of [`smoothed_loss`].
pub fn smoothed_score(u: f64, tau: f64, h: f64) -> f64 {
    if u >= 0.0 {
        tau * (u / h).min(1.0)
    } else {
        (1.0 - tau) * (u / h).max(-1.0)
    }
}

/// `P_α(β) = α‖β‖₁ + (1−α)/2 ‖β‖₂²`.
pub fn penalty(beta: &[f64], alpha_mix: f64) -> f64 {
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let l2: f64 = beta.iter().map(|b| b * b).sum();
    alpha_mix * l1 + 0.5 * (1.0 - alpha_mix) * l2
}

#[derive(Debug, Clone, Copy)]
pub struct PenaltyOptions {
    /// Penalize standardized coefficients (unit-variance columns).
    pub standardize: bool,
    /// Final smoothing width; `1e-4·sd(y)` when `None`.
    pub h_min: Option<f64>,
    pub max_sweeps: usize,
    pub kkt_tol: f64,
}

impl Default for PenaltyOptions {
    fn default() -> Self {
        PenaltyOptions {
            standardize: true,
            h_min: None,
            max_sweeps: 5_000,
            kkt_tol: 1e-6,
        }
    }
}

fn check_mix(alpha_mix: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha_mix) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha_mix {alpha_mix} is outside [0, 1]")))
    }
}

/// Standardized working copy of a dataset.
struct Design {
    n: usize,
    cols: Vec<Vec<f64>>,
    y: Vec<f64>,
    means: Vec<f64>,
    scales: Vec<f64>,
    intercept: bool,
}

impl Design {
    fn new(data: &Dataset, standardize: bool) -> Result<Self> {
        let n = data.n();
        let x = data.x();
        let mut cols = Vec::with_capacity(data.p());
        let mut means = Vec::with_capacity(data.p());
        let mut scales = Vec::with_capacity(data.p());
        for j in 0..data.p() {
            let c: Vec<f64> = x.column(j).iter().copied().collect();
            let m = if data.has_intercept() { c.iter().sum::<f64>() / n as f64 } else { 0.0 };
            let s = if standardize {
                let v = c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
                if !(v > 0.0) {
                    return Err(Error::Singular(format!("column `{}` is constant", data.labels()[j])));
                }
                v.sqrt()
            } else {
                1.0
            };
            cols.push(c.iter().map(|v| (v - m) / s).collect());
            means.push(m);
            scales.push(s);
        }
        Ok(Design {
            n,
            cols,
            y: data.y().iter().copied().collect(),
            means,
            scales,
            intercept: data.has_intercept(),
        })
    }

    fn p(&self) -> usize {
        self.cols.len()
    }

    /// Coefficients on the original covariate scale.
    fn to_original(&self, b0: f64, beta: &[f64]) -> DVector<f64> {
        let off = usize::from(self.intercept);
        let mut out = DVector::zeros(self.p() + off);
        let mut shift = 0.0;
        for j in 0..self.p() {
            let bj = beta[j] / self.scales[j];
            out[j + off] = bj;
            shift += bj * self.means[j];
        }
        if self.intercept {
            out[0] = b0 - shift;
        }
        out
    }

    /// Standardized coefficients from an original-scale vector.
    fn from_original(&self, beta: &DVector<f64>) -> (f64, Vec<f64>) {
        let off = usize::from(self.intercept);
        let slopes: Vec<f64> = (0..self.p()).map(|j| beta[j + off] * self.scales[j]).collect();
        let b0 = if self.intercept {
            beta[0] + (0..self.p()).map(|j| beta[j + off] * self.means[j]).sum::<f64>()
        } else {
            0.0
        };
        (b0, slopes)
    }
}

/// Curvature of `ρ_h` on the open interval the residual is about to enter.
#[inline]
fn curvature(u: f64, increasing: bool, tau: f64, h: f64) -> f64 {
    let inside_pos = if increasing { (0.0..h).contains(&u) } else { u > 0.0 && u <= h };
    let inside_neg = if increasing { (-h..0.0).contains(&u) } else { u > -h && u <= 0.0 };
    if inside_pos {
        tau / h
    } else if inside_neg {
        (1.0 - tau) / h
    } else {
        0.0
    }
}

/// Convex one-dimensional section `s ↦ (1/n)Σρ_h(rᵢ − s·aᵢ) + q(s)` with
/// `q'(s) = c0 + c2·s + Σₖ wₖ·sign(s − sₖ)` over the L1 kinks `(sₖ, wₖ)`.
struct Section<'a> {
    r: &'a [f64],
    a: &'a [f64],
    sign: f64,
    tau: f64,
    h: f64,
    c0: f64,
    kinks: &'a [(f64, f64)],
    c2: f64,
}

impl Section<'_> {
    /// Minimizer over `[0, s_hi]`; zero when the right derivative at 0 is
    /// nonnegative. Exact up to floating point.
    fn walk_right(&self, s_hi: f64, events: &mut Vec<(f64, f64, f64)>) -> f64 {
        let n_inv = 1.0 / self.r.len() as f64;
        let (tau, h) = (self.tau, self.h);
        let mut d = self.c0;
        let mut slope = self.c2;
        events.clear();
        for (i, &ri) in self.r.iter().enumerate() {
            let ai = self.a[i] * self.sign;
            d -= n_inv * ai * smoothed_score(ri, tau, h);
            if ai == 0.0 {
                continue;
            }
            let w = ai * ai * n_inv;
            slope += w * curvature(ri, ai < 0.0, tau, h);
            let down = ai > 0.0;
            for (v, delta) in [
                (h, if down { tau / h } else { -tau / h }),
                (0.0, if down { (1.0 - 2.0 * tau) / h } else { (2.0 * tau - 1.0) / h }),
                (-h, if down { -(1.0 - tau) / h } else { (1.0 - tau) / h }),
            ] {
                let s = (ri - v) / ai;
                if s > 0.0 && s < s_hi {
                    events.push((s, w * delta, 0.0));
                }
            }
        }
        for &(pos, w) in self.kinks {
            if w > 0.0 {
                d += if pos > 0.0 { -w } else { w };
                if pos > 0.0 && pos < s_hi {
                    events.push((pos, 0.0, 2.0 * w));
                }
            }
        }
        if d >= 0.0 {
            return 0.0;
        }
        events.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut s_cur = 0.0;
        for &(s_e, d_slope, jump) in events.iter() {
            let d_at = d + slope * (s_e - s_cur);
            if d_at >= 0.0 {
                return if slope > 0.0 { (s_cur - d / slope).min(s_e) } else { s_e };
            }
            d = d_at + jump;
            s_cur = s_e;
            if d >= 0.0 {
                return s_e;
            }
            slope += d_slope;
        }
        if slope > 0.0 {
            (s_cur - d / slope).min(s_hi)
        } else {
            s_hi.min(if s_hi.is_finite() { s_hi } else { s_cur })
        }
    }
}

struct Solver<'a> {
    x: &'a Design,
    tau: f64,
    alpha_mix: f64,
    lambda: f64,
    h: f64,
    b0: f64,
    beta: Vec<f64>,
    r: Vec<f64>,
    events: Vec<(f64, f64, f64)>,
}

impl<'a> Solver<'a> {
    fn new(x: &'a Design, tau: f64, alpha_mix: f64, b0: f64, beta: Vec<f64>) -> Self {
        let mut r = x.y.clone();
        for i in 0..x.n {
            let mut fit = if x.intercept { b0 } else { 0.0 };
            for (j, c) in x.cols.iter().enumerate() {
                fit += c[i] * beta[j];
            }
            r[i] -= fit;
        }
        Solver {
            x,
            tau,
            alpha_mix,
            lambda: 0.0,
            h: 1.0,
            b0,
            beta,
            r,
            events: Vec::new(),
        }
    }

    fn objective(&self) -> f64 {
        let loss: f64 = self.r.iter().map(|&u| smoothed_loss(u, self.tau, self.h)).sum::<f64>() / self.x.n as f64;
        loss + self.lambda * penalty(&self.beta, self.alpha_mix)
    }

    fn l1(&self) -> f64 {
        self.lambda * self.alpha_mix
    }

    fn l2(&self) -> f64 {
        self.lambda * (1.0 - self.alpha_mix)
    }

    fn gradient(&self, a: &[f64]) -> f64 {
        let n_inv = 1.0 / self.x.n as f64;
        self.r.iter().zip(a).map(|(&u, &ai)| ai * smoothed_score(u, self.tau, self.h)).sum::<f64>() * n_inv
    }

    fn kkt(&self) -> f64 {
        let mut worst: f64 = 0.0;
        if self.x.intercept {
            let ones = vec![1.0; self.x.n];
            worst = worst.max(self.gradient(&ones).abs());
        }
        for (j, c) in self.x.cols.iter().enumerate() {
            let g = self.gradient(c);
            let bj = self.beta[j];
            let v = if bj != 0.0 {
                (-g + self.l1() * bj.signum() + self.l2() * bj).abs()
            } else {
                (g.abs() - self.l1()).max(0.0)
            };
            worst = worst.max(v);
        }
        worst
    }

    fn apply(&mut self, a_col: Option<usize>, s: f64) {
        match a_col {
            None => self.r.iter_mut().for_each(|u| *u -= s),
            Some(j) => {
                let c = &self.x.cols[j];
                self.r.iter_mut().zip(c).for_each(|(u, &a)| *u -= s * a);
            }
        }
    }

    fn coordinate(&mut self, j: Option<usize>) {
        let ones;
        let a: &[f64] = match j {
            Some(j) => &self.x.cols[j],
            None => {
                ones = vec![1.0; self.x.n];
                &ones
            }
        };
        let (bj, c1, c2) = match j {
            Some(j) => (self.beta[j], self.l1(), self.l2()),
            None => (self.b0, 0.0, 0.0),
        };
        let mut events = std::mem::take(&mut self.events);
        let mut step = 0.0;
        for sign in [1.0, -1.0] {
            let sec = Section {
                r: &self.r,
                a,
                sign,
                tau: self.tau,
                h: self.h,
                c0: sign * c2 * bj,
                kinks: &[(-sign * bj, c1)],
                c2,
            };
            let s = sec.walk_right(f64::INFINITY, &mut events);
            if s > 0.0 {
                step = sign * s;
                break;
            }
        }
        self.events = events;
        if step == 0.0 {
            return;
        }
        match j {
            Some(j) => {
                let new = if c1 > 0.0 && step == -bj { 0.0 } else { bj + step };
                let s = new - bj;
                self.beta[j] = new;
                self.apply(Some(j), s);
            }
            None => {
                self.b0 += step;
                self.apply(None, step);
            }
        }
    }

    /// Active-set Newton: whenever the exact line search stops on a
    /// coefficient's kink, that coefficient leaves the set and the step is
    /// recomputed.
    fn newton(&mut self) {
        for _ in 0..=self.x.p() {
            if !self.newton_step() {
                break;
            }
        }
    }

    /// One Newton step; true when it ended on a kink.
    fn newton_step(&mut self) -> bool {
        let n = self.x.n;
        let active: Vec<usize> = (0..self.x.p()).filter(|&j| self.beta[j] != 0.0).collect();
        let off = usize::from(self.x.intercept);
        let k = active.len() + off;
        if k == 0 {
            return false;
        }
        let col = |c: usize, i: usize| -> f64 {
            if c < off {
                1.0
            } else {
                self.x.cols[active[c - off]][i]
            }
        };
        let mut hess = DMatrix::zeros(k, k);
        let mut grad = DVector::zeros(k);
        for i in 0..n {
            let u = self.r[i];
            let psi_i = smoothed_score(u, self.tau, self.h);
            let w = if u.abs() <= self.h {
                if u >= 0.0 {
                    self.tau / self.h
                } else {
                    (1.0 - self.tau) / self.h
                }
            } else {
                0.0
            };
            for a in 0..k {
                let za = col(a, i);
                grad[a] -= za * psi_i;
                if w > 0.0 {
                    for b in 0..=a {
                        hess[(a, b)] += w * za * col(b, i);
                    }
                }
            }
        }
        let n_inv = 1.0 / n as f64;
        for a in 0..k {
            grad[a] *= n_inv;
            for b in 0..=a {
                hess[(a, b)] *= n_inv;
                hess[(b, a)] = hess[(a, b)];
            }
        }
        for c in off..k {
            let bj = self.beta[active[c - off]];
            grad[c] += self.l1() * bj.signum() + self.l2() * bj;
            hess[(c, c)] += self.l2();
        }
        let scale = (0..k).map(|a| hess[(a, a)]).fold(0.0, f64::max).max(1e-12);
        for a in 0..k {
            hess[(a, a)] += 1e-10 * scale;
        }
        let Some(chol) = hess.cholesky() else { return false };
        let dir = -chol.solve(&grad);
        if grad.dot(&dir) >= 0.0 {
            return false;
        }
        let q: Vec<f64> = (0..n).map(|i| (0..k).map(|c| col(c, i) * dir[c]).sum()).collect();
        let mut c0 = 0.0;
        let mut c2 = 0.0;
        let mut kinks = Vec::with_capacity(k);
        for c in off..k {
            let bj = self.beta[active[c - off]];
            let dj = dir[c];
            c0 += self.l2() * bj * dj;
            c2 += self.l2() * dj * dj;
            let pos = if dj != 0.0 { -bj / dj } else { f64::NEG_INFINITY };
            kinks.push((pos, self.l1() * dj.abs()));
        }
        let mut events = std::mem::take(&mut self.events);
        let sec = Section {
            r: &self.r,
            a: &q,
            sign: 1.0,
            tau: self.tau,
            h: self.h,
            c0,
            kinks: &kinks,
            c2,
        };
        let s = sec.walk_right(f64::INFINITY, &mut events);
        self.events = events;
        if s <= 0.0 {
            return false;
        }
        for (i, u) in self.r.iter_mut().enumerate() {
            *u -= s * q[i];
        }
        if off == 1 {
            self.b0 += s * dir[0];
        }
        let mut landed = false;
        for c in off..k {
            let j = active[c - off];
            if kinks[c - off].0 == s && self.l1() > 0.0 {
                landed = true;
                // landed on this coefficient's kink; fold the rounding into the residuals
                let left = self.beta[j] + s * dir[c];
                self.beta[j] = 0.0;
                let col = &self.x.cols[j];
                self.r.iter_mut().zip(col).for_each(|(u, &a)| *u += left * a);
            } else {
                self.beta[j] += s * dir[c];
            }
        }
        landed
    }

    /// Sweeps until the KKT residual is below `tol`; returns `(kkt, sweeps)`.
    fn solve(&mut self, tol: f64, max_sweeps: usize) -> (f64, usize) {
        let mut prev = self.objective();
        for sweep in 1..=max_sweeps {
            if self.x.intercept {
                self.coordinate(None);
            }
            for j in 0..self.x.p() {
                self.coordinate(Some(j));
            }
            self.newton();
            let obj = self.objective();
            debug_assert!(obj <= prev + 1e-12 * prev.abs().max(1.0), "sweep {sweep} raised objective {prev} -> {obj}");
            prev = obj;
            let kkt = self.kkt();
            if kkt <= tol {
                return (kkt, sweep);
            }
        }
        (self.kkt(), max_sweeps)
    }
}

fn sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt()
}

fn tau_quantile(y: &[f64], tau: f64) -> f64 {
    // lower τ-quantile, a minimizer of Σρ_τ(yᵢ − q)
    let s = sorted_copy(y);
    let k = ((tau * s.len() as f64).ceil() as usize).clamp(1, s.len());
    s[k - 1]
}

/// Smallest `λ` with all-zero slopes:
/// `max_j |Σᵢ xᵢⱼ ψ_τ(yᵢ − q̂)| / (n·α)`, `q̂` the τ-quantile of `y`.
pub fn lambda_max(data: &Dataset, tau: f64, alpha_mix: f64) -> Result<f64> {
    lambda_max_with(data, tau, alpha_mix, PenaltyOptions::default())
}

pub fn lambda_max_with(data: &Dataset, tau: f64, alpha_mix: f64, opts: PenaltyOptions) -> Result<f64> {
    check_tau(tau)?;
    check_mix(alpha_mix)?;
    if alpha_mix == 0.0 {
        return Err(Error::InvalidArgument("ridge path has no finite lambda_max".into()));
    }
    let x = Design::new(data, opts.standardize)?;
    let q = if x.intercept { tau_quantile(&x.y, tau) } else { 0.0 };
    let mut scores: Vec<f64> = x.y.iter().map(|&v| psi(v - q, tau)).collect();
    if x.intercept {
        // at a zero residual take the subgradient that keeps Σψ = 0
        let zeros: Vec<usize> = (0..x.n).filter(|&i| x.y[i] == q).collect();
        if !zeros.is_empty() {
            let rest: f64 = (0..x.n).filter(|&i| x.y[i] != q).map(|i| scores[i]).sum();
            let v = (-rest / zeros.len() as f64).clamp(tau - 1.0, tau);
            zeros.iter().for_each(|&i| scores[i] = v);
        }
    }
    let m = x
        .cols
        .iter()
        .map(|c| c.iter().zip(&scores).map(|(a, s)| a * s).sum::<f64>().abs())
        .fold(0.0, f64::max);
    Ok(m / (x.n as f64 * alpha_mix))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenalizedFit {
    /// Original-scale coefficients, intercept first when fitted.
    pub beta: DVector<f64>,
    pub lambda: f64,
    pub h: f64,
    pub objective: f64,
    pub kkt: f64,
    pub sweeps: usize,
}

fn initial_h(x: &Design, tau: f64) -> f64 {
    let q = if x.intercept { tau_quantile(&x.y, tau) } else { 0.0 };
    let abs: Vec<f64> = x.y.iter().map(|v| (v - q).abs()).collect();
    quantile_sorted(&sorted_copy(&abs), 0.9)
}

fn h_floor(x: &Design, opts: &PenaltyOptions) -> f64 {
    opts.h_min.unwrap_or_else(|| 1e-4 * sd(&x.y)).max(f64::MIN_POSITIVE)
}

/// Penalized fit at one `λ`, continuing the smoothing width from the 90th
/// percentile of `|y − q̂|` down to the floor by halving.
pub fn fit_penalized(data: &Dataset, tau: f64, alpha_mix: f64, lambda: f64) -> Result<PenalizedFit> {
    fit_penalized_with(data, tau, alpha_mix, lambda, PenaltyOptions::default())
}

pub fn fit_penalized_with(
    data: &Dataset,
    tau: f64,
    alpha_mix: f64,
    lambda: f64,
    opts: PenaltyOptions,
) -> Result<PenalizedFit> {
    check_tau(tau)?;
    check_mix(alpha_mix)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda {lambda} must be nonnegative")));
    }
    let x = Design::new(data, opts.standardize)?;
    let h_min = h_floor(&x, &opts);
    let b0 = if x.intercept { tau_quantile(&x.y, tau) } else { 0.0 };
    let mut solver = Solver::new(&x, tau, alpha_mix, b0, vec![0.0; x.p()]);
    solver.lambda = lambda;
    let mut h = initial_h(&x, tau).max(h_min);
    let mut total = 0;
    loop {
        solver.h = h;
        let (kkt, sweeps) = solver.solve(opts.kkt_tol, opts.max_sweeps);
        total += sweeps;
        if h <= h_min {
            if kkt > opts.kkt_tol {
                return Err(Error::NotConverged { index: 0, kkt });
            }
            return Ok(PenalizedFit {
                beta: x.to_original(solver.b0, &solver.beta),
                lambda,
                h,
                objective: solver.objective(),
                kkt,
                sweeps: total,
            });
        }
        h = (0.5 * h).max(h_min);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenalizedPath {
    pub tau: f64,
    pub alpha_mix: f64,
    /// Strictly decreasing.
    pub lambdas: Vec<f64>,
    /// One column per `λ`, original scale, intercept first when fitted.
    pub betas: DMatrix<f64>,
    /// Smoothing width used at each `λ`.
    pub h: Vec<f64>,
    pub objectives: Vec<f64>,
    pub kkt: Vec<f64>,
    pub selected: Option<usize>,
}

impl PenalizedPath {
    pub fn beta(&self, k: usize) -> DVector<f64> {
        self.betas.column(k).clone_owned()
    }

    pub fn selected_beta(&self) -> Option<DVector<f64>> {
        self.selected.map(|k| self.beta(k))
    }
}

/// Default path length and `λ_min/λ_max` ratio.
pub fn default_path_shape(n: usize, p: usize) -> (usize, f64) {
    (100, if n > p { 1e-3 } else { 0.05 })
}

/// Warm-started path on `n_lambda` log-spaced values from `λ_max` down to
/// `ratio·λ_max`. Below `α = 10⁻³` the top of the grid uses the bound at
/// `α = 10⁻³` and the grid reaches down to `ratio` times the lasso bound.
pub fn fit_path(data: &Dataset, tau: f64, alpha_mix: f64, n_lambda: usize, ratio: f64) -> Result<PenalizedPath> {
    fit_path_with(data, tau, alpha_mix, n_lambda, ratio, PenaltyOptions::default())
}

pub fn fit_path_with(
    data: &Dataset,
    tau: f64,
    alpha_mix: f64,
    n_lambda: usize,
    ratio: f64,
    opts: PenaltyOptions,
) -> Result<PenalizedPath> {
    check_tau(tau)?;
    check_mix(alpha_mix)?;
    if n_lambda < 2 {
        return Err(Error::InvalidArgument("n_lambda must be at least 2".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("ratio {ratio} is outside (0, 1)")));
    }
    let x = Design::new(data, opts.standardize)?;
    let mut top = lambda_max_with(data, tau, alpha_mix.max(1e-3), opts)?;
    // the smoothed intercept-only fit can need a slightly larger threshold
    let h0 = initial_h(&x, tau).max(h_floor(&x, &opts));
    let mut probe = Solver::new(&x, tau, alpha_mix, tau_quantile(&x.y, tau), vec![0.0; x.p()]);
    probe.h = h0;
    if x.intercept {
        for _ in 0..200 {
            probe.coordinate(None);
        }
    }
    let smooth_top = x.cols.iter().map(|c| probe.gradient(c).abs()).fold(0.0, f64::max) / alpha_mix.max(1e-3);
    top = top.max(smooth_top);
    if !(top > 0.0) {
        return Err(Error::InvalidArgument("lambda_max is zero; response carries no signal".into()));
    }
    let span = if alpha_mix < 1e-3 { ratio * 1e-3 } else { ratio };
    let lambdas: Vec<f64> = (0..n_lambda)
        .map(|k| top * span.powf(k as f64 / (n_lambda - 1) as f64))
        .collect();
    fit_lambdas(&x, tau, alpha_mix, &lambdas, opts, Some(probe.b0))
}

/// Warm-started path over a caller-supplied strictly decreasing grid.
pub fn fit_path_lambdas(data: &Dataset, tau: f64, alpha_mix: f64, lambdas: &[f64], opts: PenaltyOptions) -> Result<PenalizedPath> {
    check_tau(tau)?;
    check_mix(alpha_mix)?;
    if lambdas.is_empty() || lambdas.windows(2).any(|w| w[1] >= w[0]) || lambdas.iter().any(|&l| !(l >= 0.0)) {
        return Err(Error::InvalidArgument("lambda grid must be nonnegative and strictly decreasing".into()));
    }
    let x = Design::new(data, opts.standardize)?;
    fit_lambdas(&x, tau, alpha_mix, lambdas, opts, None)
}

fn fit_lambdas(
    x: &Design,
    tau: f64,
    alpha_mix: f64,
    lambdas: &[f64],
    opts: PenaltyOptions,
    b0: Option<f64>,
) -> Result<PenalizedPath> {
    let h_min = h_floor(x, &opts);
    let mut h = initial_h(x, tau).max(h_min);
    let b0 = b0.unwrap_or_else(|| if x.intercept { tau_quantile(&x.y, tau) } else { 0.0 });
    let mut solver = Solver::new(x, tau, alpha_mix, b0, vec![0.0; x.p()]);
    let k = x.p() + usize::from(x.intercept);
    let mut betas = DMatrix::zeros(k, lambdas.len());
    let (mut hs, mut objs, mut kkts) = (Vec::new(), Vec::new(), Vec::new());
    for (idx, &lambda) in lambdas.iter().enumerate() {
        solver.lambda = lambda;
        solver.h = h;
        let (kkt, _) = solver.solve(opts.kkt_tol, opts.max_sweeps);
        if kkt > opts.kkt_tol {
            return Err(Error::NotConverged { index: idx, kkt });
        }
        betas.set_column(idx, &x.to_original(solver.b0, &solver.beta));
        hs.push(h);
        objs.push(solver.objective());
        kkts.push(kkt);
        h = (0.5 * h).max(h_min);
    }
    Ok(PenalizedPath {
        tau,
        alpha_mix,
        lambdas: lambdas.to_vec(),
        betas,
        h: hs,
        objectives: objs,
        kkt: kkts,
        selected: None,
    })
}

/// Penalized objective of an original-scale coefficient vector, evaluated
/// the way the solver sees it (standardized penalty, smoothing width `h`).
pub fn penalized_objective(
    data: &Dataset,
    tau: f64,
    alpha_mix: f64,
    lambda: f64,
    h: f64,
    beta: &DVector<f64>,
    opts: PenaltyOptions,
) -> Result<f64> {
    let x = Design::new(data, opts.standardize)?;
    let (b0, slopes) = x.from_original(beta);
    let mut s = Solver::new(&x, tau, alpha_mix, b0, slopes);
    s.lambda = lambda;
    s.h = h;
    Ok(s.objective())
}

/// Index of the path column with the smallest validation PMAD; ties go to
/// the larger `λ`.
pub fn select_by_validation(path: &mut PenalizedPath, val: &Dataset) -> Result<usize> {
    if val.n() == 0 {
        return Err(Error::Empty("validation set".into()));
    }
    let mut best = (f64::INFINITY, 0);
    for k in 0..path.lambdas.len() {
        let v = pmad(&path.beta(k), val)?;
        if v < best.0 {
            best = (v, k);
        }
    }
    path.selected = Some(best.1);
    Ok(best.1)
}

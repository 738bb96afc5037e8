#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use qshrink::quantile::check_loss;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

pub fn normal_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Minimum check loss over every basic solution that exactly interpolates a
/// size-k subset of the rows of `z`.
pub fn enumerate_vertices(z: &DMatrix<f64>, y: &DVector<f64>, tau: f64) -> f64 {
    let (n, k) = z.shape();
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let zh = DMatrix::from_fn(k, k, |r, c| z[(idx[r], c)]);
        let yh = DVector::from_fn(k, |r, _| y[idx[r]]);
        if zh.determinant().abs() > 1e-10 {
            if let Some(b) = zh.lu().solve(&yh) {
                let r = y - z * b;
                let obj: f64 = r.iter().map(|&u| check_loss(u, tau).unwrap()).sum();
                best = best.min(obj);
            }
        }
        // next combination in lexicographic order
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn random_spd(rng: &mut ChaCha8Rng, p: usize, ridge: f64) -> DMatrix<f64> {
    let a = normal_matrix(rng, p, p);
    (&a * a.transpose()) / p as f64 + DMatrix::identity(p, p) * ridge
}

/// Random risk parameters: `p₁ ∈ 1..=3`, `p₂ ∈ 3..=6`, SPD precision and
/// weight, `ω² ∈ [0.5, 2)`, random direction `γ`.
pub fn random_risk_params(rng: &mut ChaCha8Rng) -> qshrink::risk::AsymptoticParams {
    let p1 = rng.random_range(1..=3);
    let p2 = rng.random_range(3..=6);
    let gamma = random_spd(rng, p1 + p2, 0.3);
    let weight = random_spd(rng, p1, 0.5);
    let omega_sq = rng.random_range(0.5..2.0);
    let dir = normal_vector(rng, p2);
    qshrink::risk::AsymptoticParams::new(&gamma, p1, omega_sq, dir, weight).unwrap()
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// Stationary Gaussian AR(1) series with unit innovation variance.
pub fn ar1(rng: &mut ChaCha8Rng, n: usize, rho: f64) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    let mut prev: f64 = rng.sample::<f64, _>(StandardNormal) / (1.0 - rho * rho).sqrt();
    e[0] = prev;
    for i in 1..n {
        prev = rho * prev + rng.sample::<f64, _>(StandardNormal);
        e[i] = prev;
    }
    e
}

/// Linear model `y = Xβ + e` with an intercept of 1 and standard normal `X`.
pub fn linear_dataset(rng: &mut ChaCha8Rng, n: usize, beta: &[f64], errors: &DVector<f64>) -> qshrink::Dataset {
    let x = normal_matrix(rng, n, beta.len());
    let y = DVector::from_fn(n, |i, _| {
        1.0 + beta.iter().enumerate().map(|(j, b)| b * x[(i, j)]).sum::<f64>() + errors[i]
    });
    qshrink::Dataset::from_parts(x, y).unwrap()
}

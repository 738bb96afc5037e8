mod common;

use common::{ar1, linear_dataset, normal_matrix, normal_vector, random_spd, rng};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qshrink::covariance::{build_gamma, estimate_a_hac, estimate_d0, estimate_sparsity};
use qshrink::quantile::{fit_quantile, psi};
use qshrink::Dataset;
use rand::Rng;

#[test]
fn d0_matches_naive_sum() {
    let mut r = rng(11);
    let x = normal_matrix(&mut r, 20, 3);
    let d = Dataset::from_parts(x.clone(), normal_vector(&mut r, 20)).unwrap();
    let d0 = estimate_d0(&d);
    let z = d.design();
    for a in 0..4 {
        for b in 0..4 {
            let mut s = 0.0;
            for i in 0..20 {
                s += z[(i, a)] * z[(i, b)];
            }
            assert!((d0[(a, b)] - s / 20.0).abs() < 1e-14);
        }
    }
    // intercept-only corner: single column of ones
    assert!((d0[(0, 0)] - 1.0).abs() < 1e-15);
}

// A single n = 10^5 sample has roughly 10% relative sampling error under the
// Hall–Sheather window, so the target is checked on the mean of 40 draws.
#[test]
fn sparsity_of_uniform_and_normal() {
    let mut r = rng(5);
    let n = 100_000;
    let reps = 40;
    let (mut wu, mut wn) = (0.0, 0.0);
    for _ in 0..reps {
        let u = DVector::from_fn(n, |_, _| r.random::<f64>());
        wu += estimate_sparsity(&u, 0.5).unwrap() / reps as f64;
        let z = normal_vector(&mut r, n);
        wn += estimate_sparsity(&z, 0.5).unwrap() / reps as f64;
    }
    assert!((wu - 0.25).abs() < 0.05 * 0.25, "uniform {wu}");
    let target = 0.25 * 2.0 * std::f64::consts::PI;
    assert!((wn - target).abs() < 0.05 * target, "normal {wn}");
}

#[test]
fn zero_bandwidth_is_plain_score_outer_product() {
    let mut r = rng(8);
    let e = normal_vector(&mut r, 60);
    let d = linear_dataset(&mut r, 60, &[1.0, -0.5], &e);
    let fit = fit_quantile(&d, 0.3, None).unwrap();
    let a = estimate_a_hac(&d, &fit.residuals, 0.3, Some(0)).unwrap();
    let z = d.design();
    let mut want = DMatrix::zeros(3, 3);
    for i in 0..60 {
        let s = psi(fit.residuals[i], 0.3);
        want += z.row(i).transpose() * z.row(i) * (s * s);
    }
    assert!((a - want / 60.0).amax() < 1e-14);
    assert!(estimate_a_hac(&d, &fit.residuals, 0.3, Some(60)).is_err());
}

#[test]
fn iid_scores_give_quarter_d0() {
    let mut r = rng(21);
    let n = 100_000;
    let e = normal_vector(&mut r, n);
    let d = linear_dataset(&mut r, n, &[0.5], &e);
    // true median residuals keep the check independent of a large fit
    let resid = DVector::from_fn(n, |i, _| e[i]);
    let a = estimate_a_hac(&d, &resid, 0.5, Some(0)).unwrap();
    let d0 = estimate_d0(&d);
    for (x, y) in a.iter().zip(d0.iter()) {
        if y.abs() > 0.1 {
            assert!((x - 0.25 * y).abs() < 0.05 * 0.25 * y.abs(), "{x} vs {}", 0.25 * y);
        }
    }
}

#[test]
fn long_run_variance_matches_batch_means() {
    let mut r = rng(1234);
    let n = 100_000;
    let e = ar1(&mut r, n, 0.5);
    let d = Dataset::from_parts(DMatrix::zeros(n, 1), e.clone()).unwrap();
    let part = qshrink::PartitionSpec::new(vec![], vec![0], 1, true).unwrap();
    let fit = fit_quantile(&d, 0.5, Some(&part)).unwrap();
    // intercept-only design: work on a one-column dataset of ones
    let ones = Dataset::from_parts(DMatrix::from_element(n, 1, 1.0), e).unwrap().without_intercept();
    let a = estimate_a_hac(&ones, &fit.residuals, 0.5, Some(40)).unwrap()[(0, 0)];

    let scores: Vec<f64> = fit.residuals.iter().map(|&u| psi(u, 0.5)).collect();
    let batch = 1000;
    let means: Vec<f64> = scores.chunks(batch).map(|c| c.iter().sum::<f64>() / batch as f64).collect();
    let mbar = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|m| (m - mbar).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
    let lrv = var * batch as f64;
    assert!((a - lrv).abs() < 0.15 * lrv, "HAC {a} vs batch means {lrv}");
}

#[test]
fn gamma_blocks_consistent_under_role_swap() {
    let mut r = rng(3);
    let d0 = random_spd(&mut r, 5, 0.5);
    let a = random_spd(&mut r, 5, 0.5);
    let g = build_gamma(&d0, &a, 0.4, &[0, 1, 2], &[3, 4]).unwrap();
    let h = build_gamma(&d0, &a, 0.4, &[3, 4], &[0, 1, 2]).unwrap();
    assert!((&g.gamma_12.transpose() - &h.gamma_12).amax() < 1e-15);
    assert!((&g.gamma_21 - &h.gamma_12).amax() < 1e-15);
    // Schur complement shrinks in the Loewner order
    let diff = &g.gamma_22 - &g.gamma_22_1;
    assert!(diff.symmetric_eigenvalues().min() > -1e-12);
}

#[test]
fn iid_ingredients_give_scaled_inverse() {
    let mut r = rng(4);
    let x = normal_matrix(&mut r, 40, 3);
    let d = Dataset::from_parts(x, normal_vector(&mut r, 40)).unwrap();
    let d0 = estimate_d0(&d);
    let tau = 0.25;
    let g = build_gamma(&d0, &(&d0 * (tau * (1.0 - tau))), tau, &[0, 1, 2, 3], &[]).unwrap();
    let want = d0.try_inverse().unwrap() * (tau * (1.0 - tau));
    assert!((g.gamma - want).amax() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn hac_is_psd(seed in 0u64..10_000, lag in 0usize..12, tau in 0.1f64..0.9) {
        let mut r = rng(seed);
        let e = ar1(&mut r, 40, 0.6);
        let d = linear_dataset(&mut r, 40, &[1.0, 0.5, -1.0], &e);
        let resid = DVector::from_fn(40, |i, _| e[i] - 0.1);
        let a = estimate_a_hac(&d, &resid, tau, Some(lag)).unwrap();
        prop_assert!((&a - a.transpose()).amax() == 0.0);
        let min = a.symmetric_eigenvalues().min();
        prop_assert!(min > -1e-12 * a.amax().max(1.0), "min eigenvalue {}", min);
    }
}

mod common;

use common::{random_risk_params, rng};
use nalgebra::{DMatrix, DVector};
use qshrink::risk::{mc_risk_all, mc_risk_oracle, risk, risk_curve, AsymptoticParams};
use qshrink::shrinkage::EstimatorKind::{self, FM, PS, PT, S, SM};

fn fixed_params() -> AsymptoticParams {
    let g = DMatrix::from_row_slice(
        5,
        5,
        &[
            2.0, 0.4, 0.6, 0.3, 0.1, 0.4, 1.5, 0.2, 0.5, 0.3, 0.6, 0.2, 1.8, 0.2, 0.1, 0.3, 0.5, 0.2, 1.2, 0.1, 0.1, 0.3,
            0.1, 0.1, 1.0,
        ],
    );
    AsymptoticParams::new(&g, 2, 1.3, DVector::from_vec(vec![1.0, -0.5, 0.25]), DMatrix::identity(2, 2)).unwrap()
}

#[test]
fn fm_and_null_sm_match_gaussian_moments() {
    let p = fixed_params();
    let (fm, se) = mc_risk_oracle(FM, &p, 0.05, 200_000, 1).unwrap();
    let want = p.omega_sq * p.gamma_11_2_inv.trace();
    assert!((fm - want).abs() < 3.0 * se, "{fm} vs {want}");
    let p0 = p.with_gamma_vec(DVector::zeros(3)).unwrap();
    let (sm, se) = mc_risk_oracle(SM, &p0, 0.05, 200_000, 2).unwrap();
    let want = p.omega_sq * p.gamma_11_inv.trace();
    assert!((sm - want).abs() < 3.0 * se, "{sm} vs {want}");
}

#[test]
fn closed_forms_track_simulation() {
    let mut r = rng(404);
    for _ in 0..3 {
        let base = random_risk_params(&mut r);
        for delta in [0.0, 2.0, 10.0] {
            let p = base.with_gamma_vec(&base.gamma_vec * (delta / base.noncentrality).sqrt()).unwrap();
            let mc = mc_risk_all(&p, 0.05, 200_000, 99).unwrap();
            for k in EstimatorKind::ALL {
                let cf = risk(k, &p, 0.05).unwrap();
                let m = mc[&k];
                assert!((cf - m.estimate).abs() < 3.0 * m.std_error + 1e-12, "{:?} at {delta}: {cf} vs {:?}", k, m);
            }
        }
    }
}

#[test]
fn positive_part_beats_stein_near_null() {
    let p = fixed_params().with_gamma_vec(DVector::from_vec(vec![0.1, 0.0, 0.0])).unwrap();
    let (s, se_s) = mc_risk_oracle(S, &p, 0.05, 1_000_000, 5).unwrap();
    let (ps, se_ps) = mc_risk_oracle(PS, &p, 0.05, 1_000_000, 5).unwrap();
    assert!(s - ps > 3.0 * se_s.max(se_ps), "S {s} PS {ps}");
    assert!(risk(PS, &p, 0.05).unwrap() < risk(S, &p, 0.05).unwrap());
}

#[test]
fn scalar_blocks_at_null() {
    let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.8, 0.8, 1.0]);
    let p = AsymptoticParams::new(&g, 1, 0.7, DVector::zeros(1), DMatrix::identity(1, 1)).unwrap();
    let sm = risk(SM, &p, 0.05).unwrap();
    let fm = risk(FM, &p, 0.05).unwrap();
    assert!((sm - 0.7 / 2.0).abs() < 1e-14);
    assert!((fm - 0.7 / (2.0 - 0.64)).abs() < 1e-14);
    assert!(sm <= fm);
    // Stein-type risks need p2 ≥ 3
    assert!(risk(S, &p, 0.05).is_err());
}

#[test]
fn pretest_curve_rises_then_returns() {
    let p = fixed_params();
    let grid: Vec<f64> = (0..=120).map(|i| 0.5 * i as f64).collect();
    let pts = risk_curve(&p, &[FM, PT], &grid, 0.05).unwrap();
    let fm = pts[0].risks[&FM];
    let pt: Vec<f64> = pts.iter().map(|q| q.risks[&PT]).collect();
    assert!(pt[0] <= fm);
    let (imax, &max) = pt.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    assert!(max > fm && imax > 0 && imax < pt.len() - 1);
    let last = *pt.last().unwrap();
    assert!(last < max && (last - fm).abs() < 0.1 * (max - fm));
    assert!(pts.iter().all(|q| (q.risks[&FM] - fm).abs() < 1e-14));
}

#[test]
fn curve_hits_requested_noncentrality() {
    let p = fixed_params();
    let pts = risk_curve(&p, &[SM], &[0.0, 3.0], 0.05).unwrap();
    let scaled = p.with_gamma_vec(&p.gamma_vec * (3.0 / p.noncentrality).sqrt()).unwrap();
    assert!((scaled.noncentrality - 3.0).abs() < 1e-12);
    assert!((pts[1].risks[&SM] - risk(SM, &scaled, 0.05).unwrap()).abs() < 1e-12);
    assert!(risk_curve(&p, &[SM], &[2.0, 1.0], 0.05).is_err());
    assert!(risk_curve(&p, &[SM], &[], 0.05).is_err());
}

#[test]
fn invalid_inputs_are_rejected() {
    let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(AsymptoticParams::new(&not_pd, 1, 1.0, DVector::zeros(1), DMatrix::identity(1, 1)).is_err());
    let p = fixed_params();
    assert!(mc_risk_oracle(FM, &p, 0.05, 100, 1).is_err());
    assert!(risk(PT, &p, 1.5).is_err());
}

#[test]
fn oracle_is_reproducible() {
    let p = fixed_params();
    assert_eq!(mc_risk_all(&p, 0.05, 20_000, 3).unwrap(), mc_risk_all(&p, 0.05, 20_000, 3).unwrap());
}

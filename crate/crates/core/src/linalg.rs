//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn subvector(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_fn(idx.len(), |i, _| v[idx[i]])
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Inverse of a symmetric positive definite matrix, falling back to LU.
pub fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Ok(symmetrize(&ch.inverse()));
    }
    m.clone()
        .try_inverse()
        .map(|inv| symmetrize(&inv))
        .ok_or_else(|| Error::Singular(what.to_string()))
}

pub fn inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(what.to_string()))
}

/// Schur complement `M₂₂ − M₂₁ M₁₁⁻¹ M₁₂` for the index blocks `b1`, `b2`.
pub fn schur_complement(m: &DMatrix<f64>, b1: &[usize], b2: &[usize]) -> Result<DMatrix<f64>> {
    let m11 = submatrix(m, b1, b1);
    let m12 = submatrix(m, b1, b2);
    let m22 = submatrix(m, b2, b2);
    if b1.is_empty() {
        return Ok(m22);
    }
    let inv11 = spd_inverse(&m11, "leading block of Schur complement")?;
    Ok(symmetrize(&(m22 - m12.transpose() * inv11 * m12)))
}

/// Numerical rank from the singular values, relative tolerance `rtol`.
pub fn rank(m: &DMatrix<f64>, rtol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * smax).count()
}

/// Indices of columns that can be dropped to restore full column rank:
/// each listed column is (numerically) a combination of earlier ones.
pub fn dependent_columns(m: &DMatrix<f64>, rtol: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    for j in 0..m.ncols() {
        let mut v = m.column(j).clone_owned();
        let norm0 = v.norm();
        for q in &basis {
            let c = q.dot(&v);
            v -= q * c;
        }
        let nv = v.norm();
        if nv <= rtol * norm0.max(scale) || norm0 == 0.0 {
            out.push(j);
        } else {
            basis.push(v / nv);
        }
    }
    out
}

/// Empirical quantile with linear interpolation between order statistics
/// (the "type 7" convention). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted_copy(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn schur_matches_inverse_identity() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[4.0, 1.0, 0.5, 0.2, 1.0, 3.0, 0.3, 0.1, 0.5, 0.3, 2.0, 0.4, 0.2, 0.1, 0.4, 1.5],
        );
        let s = schur_complement(&a, &[0, 1], &[2, 3]).unwrap();
        let inv = a.clone().try_inverse().unwrap();
        let alt = submatrix(&inv, &[2, 3], &[2, 3]).try_inverse().unwrap();
        assert_relative_eq!(s, alt, epsilon = 1e-12);
    }

    #[test]
    fn detects_duplicate_column() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 2.0, 0.0, 1.0, 1.0, 1.0, 5.0, 5.0]);
        assert_eq!(dependent_columns(&m, 1e-10), vec![2]);
        assert_eq!(rank(&m, 1e-10), 2);
    }

    #[test]
    fn type7_quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
        assert_relative_eq!(quantile_sorted(&s, 0.5), 2.5);
    }
}

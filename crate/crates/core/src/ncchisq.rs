//! Noncentral chi-square distribution via its Poisson mixture representation.
//!
//! With noncentrality `Δ`, `χ²_ν(Δ)` is a mixture of central `χ²_{ν+2j}` laws
//! with Poisson(`Δ/2`) weights. The series is cut once the remaining weight on
//! both sides of the mode falls below `1e-14`.

use crate::error::{Error, Result};
use crate::special::{chisq_cdf, gamma_p, ln_gamma};

const TAIL: f64 = 1e-14;

/// Poisson(`lambda`) probabilities covering all but `TAIL` of the mass,
/// as `(index, weight)` pairs in increasing index order.
pub fn poisson_weights(lambda: f64) -> Vec<(usize, f64)> {
    if lambda <= 0.0 {
        return vec![(0, 1.0)];
    }
    let mode = lambda.floor() as usize;
    let w_mode = (-lambda + mode as f64 * lambda.ln() - ln_gamma(mode as f64 + 1.0)).exp();

    let mut lower = Vec::new();
    let mut w = w_mode;
    let mut j = mode;
    while j > 0 {
        w *= j as f64 / lambda;
        j -= 1;
        lower.push((j, w));
        // remaining lower tail is geometric-dominated by ratio j/λ < 1
        let r = j as f64 / lambda;
        if w * r / (1.0 - r).max(1e-300) < 0.5 * TAIL {
            break;
        }
    }
    lower.reverse();

    let mut out = lower;
    out.push((mode, w_mode));
    let mut w = w_mode;
    let mut j = mode;
    loop {
        w *= lambda / (j + 1) as f64;
        j += 1;
        out.push((j, w));
        let r = lambda / (j + 1) as f64;
        if r < 1.0 && w * r / (1.0 - r) < 0.5 * TAIL {
            break;
        }
    }
    out
}

/// CDF of `χ²_df(Δ)` at `x`.
pub fn ncchisq_cdf(x: f64, df: f64, delta: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let s: f64 = poisson_weights(0.5 * delta)
        .into_iter()
        .map(|(j, w)| w * chisq_cdf(x, df + 2.0 * j as f64))
        .sum();
    s.clamp(0.0, 1.0)
}

fn check_moment(df: f64, power: u32) -> Result<()> {
    if power > 2 {
        return Err(Error::InvalidArgument(format!("power must be 0, 1 or 2, got {power}")));
    }
    if !(df > 2.0 * power as f64) {
        return Err(Error::MomentUndefined(format!(
            "E[X^-{power}] needs more than {} degrees of freedom, got {df}",
            2 * power
        )));
    }
    Ok(())
}

// E[X^{-m}] for central χ²_ν: Γ(ν/2 − m) / (2^m Γ(ν/2))
fn central_inverse_moment(nu: f64, power: u32) -> f64 {
    match power {
        0 => 1.0,
        1 => 1.0 / (nu - 2.0),
        _ => 1.0 / ((nu - 2.0) * (nu - 4.0)),
    }
}

/// `E[(χ²_df(Δ))^(−power)]` for `power ∈ {1, 2}`.
pub fn expect_inv_ncchisq(df: f64, delta: f64, power: u32) -> Result<f64> {
    check_moment(df, power)?;
    Ok(poisson_weights(0.5 * delta)
        .into_iter()
        .map(|(j, w)| w * central_inverse_moment(df + 2.0 * j as f64, power))
        .sum())
}

/// `E[(χ²_df(Δ))^(−power) · I(χ²_df(Δ) < cutoff)]` for `power ∈ {0, 1, 2}`.
///
/// Each central component reduces to an incomplete gamma ratio:
/// `E[X^{-m} I(X < c)] = Γ(ν/2 − m)/(2^m Γ(ν/2)) · P(ν/2 − m, c/2)`.
pub fn truncated_moment(df: f64, delta: f64, cutoff: f64, power: u32) -> Result<f64> {
    check_moment(df, power)?;
    if cutoff <= 0.0 {
        return Ok(0.0);
    }
    let m = power as f64;
    Ok(poisson_weights(0.5 * delta)
        .into_iter()
        .map(|(j, w)| {
            let nu = df + 2.0 * j as f64;
            w * central_inverse_moment(nu, power) * gamma_p(0.5 * nu - m, 0.5 * cutoff)
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_one() {
        for lambda in [0.0, 0.3, 1.0, 7.5, 40.0, 250.0] {
            let s: f64 = poisson_weights(lambda).iter().map(|p| p.1).sum();
            assert!((s - 1.0).abs() < 1e-13, "lambda {lambda}: {s}");
        }
    }

    #[test]
    fn central_df2_closed_form() {
        for x in [0.1, 1.0, 2.5, 9.0] {
            assert_relative_eq!(ncchisq_cdf(x, 2.0, 0.0), 1.0 - (-x / 2.0f64).exp(), epsilon = 1e-14);
        }
        assert_eq!(ncchisq_cdf(0.0, 3.0, 2.0), 0.0);
    }

    #[test]
    fn central_inverse_moments() {
        assert_relative_eq!(expect_inv_ncchisq(7.0, 0.0, 1).unwrap(), 0.2, epsilon = 1e-15);
        assert_relative_eq!(expect_inv_ncchisq(7.0, 0.0, 2).unwrap(), 1.0 / 15.0, epsilon = 1e-15);
        assert!(matches!(expect_inv_ncchisq(4.0, 1.0, 2), Err(Error::MomentUndefined(_))));
    }

    #[test]
    fn truncation_limits() {
        let full = expect_inv_ncchisq(6.0, 3.0, 1).unwrap();
        assert_relative_eq!(truncated_moment(6.0, 3.0, f64::INFINITY, 1).unwrap(), full, epsilon = 1e-15);
        assert_eq!(truncated_moment(6.0, 3.0, 0.0, 1).unwrap(), 0.0);
        assert_relative_eq!(
            truncated_moment(5.0, 2.0, 4.0, 0).unwrap(),
            ncchisq_cdf(4.0, 5.0, 2.0),
            epsilon = 1e-14
        );
    }
}

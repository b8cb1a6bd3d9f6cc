//! Special functions backing the exact binomial confidence bounds.

use crate::error::{Error, Result};

const BETA_CF_TOL: f64 = 1e-14;
const BETA_CF_MAX_ITER: usize = 400;
const BETA_INV_MAX_ITER: usize = 200;

/// Natural log of the gamma function (Lanczos approximation, g = 7).
#[allow(clippy::excessive_precision)] // literature constants kept verbatim
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (std::f64::consts::TAU).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < BETA_CF_TOL {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta shape parameters must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Inverse of the Beta(a, b) CDF: returns x with I_x(a, b) = p, via bisection
/// on the monotone CDF over [0, 1].
pub fn beta_inv_cdf(p: f64, a: f64, b: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "beta_inv_cdf: p must lie strictly in (0, 1), got {p}"
        )));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta_inv_cdf: shape parameters must be positive, got a={a}, b={b}"
        )));
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    for _ in 0..BETA_INV_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if regularized_incomplete_beta(mid, a, b) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ln_gamma_matches_factorials() {
        // Gamma(n) = (n-1)!
        let cases: [(f64, f64); 5] =
            [(1.0, 1.0), (2.0, 1.0), (3.0, 2.0), (5.0, 24.0), (7.0, 720.0)];
        for (x, fact) in cases {
            assert!((ln_gamma(x) - fact.ln()).abs() < 1e-12, "x={x}");
        }
        // Gamma(1/2) = sqrt(pi)
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn uniform_median() {
        // Beta(1,1) is uniform: quantile p = p.
        let x = beta_inv_cdf(0.5, 1.0, 1.0).unwrap();
        assert!((x - 0.5).abs() < 1e-12);
    }

    #[test]
    fn power_closed_form_when_b_is_one() {
        // I_x(a, 1) = x^a, so the p-quantile is p^(1/a).
        let x = beta_inv_cdf(0.005, 500.0, 1.0).unwrap();
        let expected = 0.005_f64.powf(1.0 / 500.0);
        assert!((x - expected).abs() < 1e-9, "x={x}, expected={expected}");
        assert!((x - 0.989460).abs() < 1e-6);
    }

    #[test]
    fn mirrored_closed_form_when_a_is_one() {
        // I_x(1, b) = 1 - (1-x)^b, so the p-quantile is 1 - (1-p)^(1/b).
        let x = beta_inv_cdf(0.995, 1.0, 500.0).unwrap();
        let expected = 1.0 - 0.005_f64.powf(1.0 / 500.0);
        assert!((x - expected).abs() < 1e-9, "x={x}, expected={expected}");
        assert!((x - 0.010540).abs() < 1e-6);
    }

    #[test]
    fn out_of_range_p_rejected() {
        assert!(beta_inv_cdf(0.0, 1.0, 1.0).is_err());
        assert!(beta_inv_cdf(1.0, 1.0, 1.0).is_err());
        assert!(beta_inv_cdf(-0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn residual_within_tolerance() {
        for &(p, a, b) in &[
            (0.005, 500.0, 1.0),
            (0.995, 1.0, 500.0),
            (0.3, 450.0, 51.0),
            (0.97, 51.0, 450.0),
            (0.5, 7.0, 13.0),
        ] {
            let x = beta_inv_cdf(p, a, b).unwrap();
            let back = regularized_incomplete_beta(x, a, b);
            assert!((back - p).abs() < 1e-10, "p={p} a={a} b={b} residual={}", back - p);
        }
    }

    proptest! {
        #[test]
        fn quantile_monotone_in_p(
            p1 in 0.01f64..0.99,
            p2 in 0.01f64..0.99,
            a in 0.5f64..200.0,
            b in 0.5f64..200.0,
        ) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            let x_lo = beta_inv_cdf(lo, a, b).unwrap();
            let x_hi = beta_inv_cdf(hi, a, b).unwrap();
            prop_assert!(x_lo <= x_hi + 1e-12);
        }
    }
}

//! Standard normal helpers and log-domain summation.

use std::f64::consts::{PI, SQRT_2};

/// `-0.5 * ln(2π)`
pub const LOG_INV_SQRT_2PI: f64 = -0.918_938_533_204_672_7;

#[inline]
pub fn std_normal_logpdf(z: f64) -> f64 {
    LOG_INV_SQRT_2PI - 0.5 * z * z
}

#[inline]
pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Log density of `N(mean, var)` at `x`.
#[inline]
pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    LOG_INV_SQRT_2PI - 0.5 * var.ln() - 0.5 * d * d / var
}

/// Upper tail `P(Z > z)` of the standard normal.
#[inline]
pub fn std_normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

#[inline]
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// `log Σ exp(xs)` with a max shift. Empty input gives `-inf`.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Normalized weights `exp(x_i - logsumexp(xs))`, written into `out`.
/// Returns the log normalizer.
pub fn softmax_into(xs: &[f64], out: &mut Vec<f64>) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.clear();
    out.extend(xs.iter().map(|&x| (x - m).exp()));
    let s: f64 = out.iter().sum();
    for w in out.iter_mut() {
        *w /= s;
    }
    m + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logpdf_matches_pdf() {
        for &z in &[-3.0, -0.5, 0.0, 1.0, 4.0] {
            assert!((std_normal_logpdf(z).exp() - std_normal_pdf(z)).abs() < 1e-15);
        }
        assert!((normal_logpdf(2.0, 0.0, 2.0) - (-2.265_512_123_484_645)).abs() < 1e-12);
    }

    #[test]
    fn sf_reference_values() {
        assert_eq!(std_normal_sf(0.0), 0.5);
        assert!((std_normal_sf(1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((std_normal_sf(5.0) - 2.866_515_718_791_933e-7).abs() < 1e-19);
        assert!((std_normal_cdf(-1.0) - std_normal_sf(1.0)).abs() < 1e-16);
    }

    #[test]
    fn logsumexp_extremes() {
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        let v = logsumexp(&[-1000.0, -1000.0]);
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        let mut w = Vec::new();
        let z = softmax_into(&[-800.0, -800.0 + 3f64.ln()], &mut w);
        assert!((w[0] - 0.25).abs() < 1e-12 && (w[1] - 0.75).abs() < 1e-12);
        assert!((z - (-800.0 + 4f64.ln())).abs() < 1e-12);
    }
}

//! Error-function helpers.

use std::f64::consts::PI;

/// Beyond this value of `x²` the factor `exp(x²)` overflows once combined
/// with downstream factors, so the scaled form switches to its asymptotic
/// expansion.
pub const SCALED_ERFC_SWITCH: f64 = 700.0;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
///
/// Finite for every finite `x ≥ 0`; for `x² > 700` the asymptotic series
/// `1/(x√π)·Σ (−1)^k (2k−1)!!/(2x²)^k` is summed to machine precision.
pub fn erfc_scaled(x: f64) -> f64 {
    if x < 0.0 {
        // erfcx(-x) = 2 exp(x²) - erfcx(x)
        return 2.0 * (x * x).exp() - erfc_scaled(-x);
    }
    if x * x <= SCALED_ERFC_SWITCH {
        return (x * x).exp() * erfc(x);
    }
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        term *= -((2 * k - 1) as f64) * inv;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum / (x * PI.sqrt())
}

/// Standard normal density with mean `center` and width `sigma`.
pub fn gaussian_density(x: f64, center: f64, sigma: f64) -> f64 {
    let z = (x - center) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

/// Standard normal quantile `Φ⁻¹(p)` for `0 < p < 1`.
///
/// Newton iteration on `ln Φ(x) = ln p`, which stays well conditioned in the
/// far tail where `Φ` itself is tiny.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability {p} outside (0, 1)");
    if p > 0.5 {
        return -normal_quantile(1.0 - p);
    }
    let target = p.ln();
    let mut x = -(-2.0 * target).sqrt().min(38.0) + 1.0;
    for _ in 0..100 {
        let u = -x / 2f64.sqrt();
        // Φ(x)/φ(x) = √(π/2)·erfcx(−x/√2) for x ≤ 0
        let mills = (PI / 2.0).sqrt() * erfc_scaled(u);
        let ln_cdf = (0.5 * erfc(u)).ln();
        let step = (ln_cdf - target) * mills;
        x = (x - step).min(0.0);
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_inverts_cdf() {
        assert_eq!(normal_quantile(0.5), 0.0);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        for &p in &[1e-12, 1e-4, 0.1, 0.3, 0.77, 0.999] {
            let x = normal_quantile(p);
            assert!(
                (0.5 * erfc(-x / 2f64.sqrt()) / p - 1.0).abs() < 1e-12,
                "p={p}"
            );
        }
    }

    #[test]
    fn scaled_erfc_branches_meet() {
        let x = SCALED_ERFC_SWITCH.sqrt();
        let below = erfc_scaled(x * (1.0 - 1e-12));
        let above = erfc_scaled(x * (1.0 + 1e-12));
        assert!((below - above).abs() / below < 1e-11, "{below} vs {above}");
    }

    #[test]
    fn scaled_erfc_known_values() {
        // erfcx(0) = 1, erfcx(1) = 0.42758357615580700442
        assert_eq!(erfc_scaled(0.0), 1.0);
        assert!((erfc_scaled(1.0) - 0.427_583_576_155_807).abs() < 1e-15);
        // large-x leading behaviour
        let x = 1e4;
        assert!((erfc_scaled(x) * x * PI.sqrt() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn negative_argument_reflection() {
        let x: f64 = -0.7;
        let direct = (x * x).exp() * erfc(x);
        assert!((erfc_scaled(x) - direct).abs() < 1e-14);
    }
}

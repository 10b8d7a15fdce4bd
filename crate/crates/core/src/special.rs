//! Standard normal density and distribution function.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `phi(z)`, the standard normal density.
#[inline]
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// `Phi(z)` through the complementary error function, accurate in both tails.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((normal_pdf(1.0) - 0.241_970_724_519_143_37).abs() < 1e-16);
        // Lower tail keeps relative accuracy.
        let v = normal_cdf(-10.0);
        assert!((v / 7.619_853_024_160_527e-24 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_matches_integrated_pdf() {
        // Simpson rule on [-8, z] as an independent route.
        for &z in &[-3.0, -1.3, 0.0, 0.4, 2.2] {
            let a = -8.0;
            let n = 20_000;
            let h = (z - a) / n as f64;
            let mut s = normal_pdf(a) + normal_pdf(z);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * normal_pdf(a + i as f64 * h);
            }
            let integral = s * h / 3.0;
            assert!((integral - normal_cdf(z)).abs() < 1e-12, "z={z}");
        }
    }
}

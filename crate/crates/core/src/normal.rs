//! Univariate standard normal functions.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF, exact at the infinities.
pub fn cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * erfc(-x * FRAC_1_SQRT_2)
    }
}

/// Standard normal quantile. Returns the infinities at 0 and 1.
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        -SQRT_2 * erfc_inv(2.0 * p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(cdf(0.0), 0.5);
        assert!((cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15, "{:e}", cdf(1.0) - 0.841_344_746_068_542_9);
        assert!((cdf(-5.0) - 2.866_515_718_791_933e-7).abs() < 1e-20, "{:e}", cdf(-5.0));
        assert!((quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert_eq!(cdf(f64::INFINITY), 1.0);
        assert_eq!(quantile(0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn quantile_inverts_cdf() {
        // upper tail of Φ is too coarse in double precision to invert, so only x ≤ 0
        for i in 1..=100 {
            let x = -8.0 + 0.08 * i as f64;
            let back = quantile(cdf(x));
            assert!((back - x).abs() < 1e-12 * (1.0 + x.abs()), "x={x} back={back}");
        }
    }
}

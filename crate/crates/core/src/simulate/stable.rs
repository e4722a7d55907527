//! Stable draws by the Chambers–Mallows–Stuck transform.
//!
//! `stable(1, α, κ)` has characteristic function
//! `exp{−|t|^α (1 − iκ sign(t) tan(πα/2))}` for `α ≠ 1` and
//! `exp{−|t| (1 + iκ (2/π) sign(t) log|t|)}` for `α = 1`, so the right tail is
//! `k_α (1 + κ) x^{−α}` for every `α < 2`.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use std::f64::consts::FRAC_PI_2;

pub(crate) fn check(alpha: f64, kappa: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 2], got {alpha}")));
    }
    if !(kappa.abs() <= 1.0) {
        return Err(Error::InvalidArgument(format!("kappa must lie in [-1, 1], got {kappa}")));
    }
    Ok(())
}

/// One draw; `alpha` and `kappa` must already be validated.
pub(crate) fn draw<R: Rng + ?Sized>(alpha: f64, kappa: f64, rng: &mut R) -> f64 {
    let v = FRAC_PI_2 * (2.0 * rng.random::<f64>() - 1.0);
    let w: f64 = Exp1.sample(rng);
    if alpha == 1.0 {
        let a = FRAC_PI_2 + kappa * v;
        (a * v.tan() - kappa * (FRAC_PI_2 * w * v.cos() / a).ln()) / FRAC_PI_2
    } else {
        let t = kappa * (alpha * FRAC_PI_2).tan();
        let b = t.atan() / alpha;
        let s = (1.0 + t * t).powf(1.0 / (2.0 * alpha));
        s * (alpha * (v + b)).sin() / v.cos().powf(1.0 / alpha) * ((v - alpha * (v + b)).cos() / w).powf((1.0 - alpha) / alpha)
    }
}

/// `count` iid `stable(1, α, κ)` draws from stream `(seed, 0)`.
pub fn sample_stable(alpha: f64, kappa: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
    check(alpha, kappa)?;
    let mut rng = crate::rng::stream(seed, 0);
    Ok((0..count).map(|_| draw(alpha, kappa, &mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Empirical characteristic function against the closed form at a few points.
    fn ecf_gap(alpha: f64, kappa: f64) -> f64 {
        let x = sample_stable(alpha, kappa, 200_000, 3).unwrap();
        let mut worst = 0.0f64;
        for &t in &[0.2, 0.5, 1.0, 1.5, 2.0f64] {
            let (re, im) = x.iter().fold((0.0, 0.0), |(a, b), v| (a + (t * v).cos(), b + (t * v).sin()));
            let (re, im) = (re / x.len() as f64, im / x.len() as f64);
            let h = if alpha == 1.0 { -(2.0 / std::f64::consts::PI) * t.ln() } else { (alpha * FRAC_PI_2).tan() };
            let m = (-t.powf(alpha)).exp();
            let phase = t.powf(alpha) * kappa * h;
            worst = worst.max((re - m * phase.cos()).abs()).max((im - m * phase.sin()).abs());
        }
        worst
    }

    #[test]
    fn characteristic_function_matches() {
        for &(a, k) in &[(2.0, 0.0), (1.5, 0.0), (1.5, 0.7), (1.0, 0.0), (1.0, 0.5), (0.8, -0.4)] {
            let gap = ecf_gap(a, k);
            assert!(gap < 0.01, "alpha={a} kappa={k}: {gap}");
        }
    }

    #[test]
    fn gaussian_case_has_variance_two() {
        let x = sample_stable(2.0, 0.0, 200_000, 5).unwrap();
        let v = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((v - 2.0).abs() < 0.03, "{v}");
    }

    #[test]
    fn cauchy_median_and_empty() {
        let mut x = sample_stable(1.0, 0.0, 100_001, 9).unwrap();
        x.sort_by(f64::total_cmp);
        // median SE of a Cauchy sample is π/(2√n)
        assert!(x[50_000].abs() < 3.0 * std::f64::consts::PI / (2.0 * 100_001f64.sqrt()));
        assert!(sample_stable(1.5, 0.0, 0, 1).unwrap().is_empty());
        assert!(sample_stable(2.5, 0.0, 1, 1).is_err());
    }
}

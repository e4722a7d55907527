//! Bivariate normal probabilities by one-dimensional Gauss–Legendre quadrature
//! (Drezner–Wesolowsky form with Genz's high-correlation correction).

use crate::normal;
use crate::quadrature::gauss_legendre;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(20))
}

/// `P(X > h, Y > k)` for standard bivariate normal with correlation `r`.
pub fn bvnu(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return normal::cdf(-k);
    }
    if k == f64::NEG_INFINITY {
        return normal::cdf(-h);
    }
    let (x, w) = rule();
    let two_pi = 2.0 * PI;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        for (xi, wi) in x.iter().zip(w) {
            let sn = (asr * (xi + 1.0) / 2.0).sin();
            bvn += wi * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
        }
        return (bvn * asr / (2.0 * two_pi) + normal::cdf(-h) * normal::cdf(-k)).clamp(0.0, 1.0);
    }
    let mut k = k;
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    if r.abs() < 1.0 {
        let as_ = (1.0 - r) * (1.0 + r);
        let mut a = as_.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        let asr = -(bs / as_ + hk) / 2.0;
        if asr > -100.0 {
            bvn = a * asr.exp() * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
        }
        if hk > -100.0 {
            let b = bs.sqrt();
            bvn -= (-hk / 2.0).exp() * two_pi.sqrt() * normal::cdf(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (xi, wi) in x.iter().zip(w) {
            let xs = (a * (xi + 1.0)).powi(2);
            let rs = (1.0 - xs).sqrt();
            let asr = -(bs / xs + hk) / 2.0;
            if asr > -100.0 {
                bvn += a * wi * asr.exp() * ((-hk * xs / (2.0 * (1.0 + rs).powi(2))).exp() / rs - (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
        bvn = -bvn / two_pi;
    }
    if r > 0.0 {
        bvn += normal::cdf(-h.max(k));
    } else {
        bvn = -bvn;
        if k > h {
            if h < 0.0 {
                bvn += normal::cdf(k) - normal::cdf(h);
            } else {
                bvn += normal::cdf(-h) - normal::cdf(-k);
            }
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// `P(a1 < X < b1, a2 < Y < b2)` for standard bivariate normal with correlation `r`.
pub fn bvn_rect(a1: f64, b1: f64, a2: f64, b2: f64, r: f64) -> f64 {
    let p = bvnu(a1, a2, r) - bvnu(a1, b2, r) - bvnu(b1, a2, r) + bvnu(b1, b2, r);
    p.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ∫_{-∞}^{h} φ(x) Φ((k − r x)/√(1−r²)) dx by composite Simpson on a wide grid.
    fn lower_by_simpson(h: f64, k: f64, r: f64) -> f64 {
        let lo = -12.0f64;
        let hi = h.min(12.0);
        if hi <= lo {
            return 0.0;
        }
        let n = 20_000;
        let step = (hi - lo) / n as f64;
        let s = (1.0 - r * r).sqrt();
        let f = |x: f64| normal::pdf(x) * normal::cdf((k - r * x) / s);
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            let x = lo + i as f64 * step;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        acc * step / 3.0
    }

    #[test]
    fn orthant_identity() {
        for &r in &[-0.99, -0.9, -0.5, 0.0, 0.5, 0.9, 0.95, 0.999] {
            let want = 0.25 + f64::asin(r) / (2.0 * PI);
            assert!((bvnu(0.0, 0.0, r) - want).abs() < 1e-14, "r={r}");
        }
    }

    #[test]
    fn matches_direct_quadrature() {
        for &r in &[-0.97, -0.6, -0.2, 0.3, 0.8, 0.93, 0.99] {
            for &(h, k) in &[(0.5, -1.0), (-1.3, 0.7), (2.0, 1.5), (-0.2, -0.4)] {
                // P(X ≤ h, Y ≤ k) = P(X > −h, Y > −k)
                let got = bvnu(-h, -k, r);
                let want = lower_by_simpson(h, k, r);
                assert!((got - want).abs() < 1e-10, "r={r} h={h} k={k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn degenerate_correlations() {
        assert!((bvnu(0.3, -0.2, 1.0) - normal::cdf(-0.3)).abs() < 1e-15);
        assert!((bvnu(0.3, -0.5, -1.0) - (normal::cdf(0.5) - normal::cdf(0.3))).abs() < 1e-15);
    }
}

//! Asymptotic record laws under an extremal index: GEV utilities, the limiting
//! record probability `1/(nθ)`, and closed forms for θ in three model families.

use crate::error::{Error, Result};
use crate::linalg::CorrMatrix;
use crate::mvn::{mvn_cdf_with, MvnProblem};
use crate::numerics::{Estimate, Numerics};
use crate::quadrature::gauss_laguerre;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Rule producing the norming constants `(a_n, b_n)` with `P(M_n ≤ a_n x + b_n) → G(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Norming {
    /// `a_n = (2 log n)^{-1/2}`, `b_n = 1/a_n − a_n (log log n + log 4π)/2`.
    Gaussian,
    /// `a_n = n^{1/α}`, `b_n = 0`.
    Frechet {
        alpha: f64,
    },
    /// `a_n = 1/n`, `b_n = 1` (uniform right endpoint).
    UnitEndpoint,
    Fixed {
        a: f64,
        b: f64,
    },
}

/// The three GEV sub-families in their classical parametrization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GevFamily {
    /// `exp(−e^{−x})`.
    Gumbel,
    /// `exp(−x^{−α})` on `x > 0`.
    Frechet { alpha: f64 },
    /// `exp(−(−x)^α)` on `x < 0`.
    NegWeibull { alpha: f64 },
}

/// A GEV limit `G_γ` together with its norming rule.
///
/// `γ = 0` is Gumbel, `γ > 0` is Fréchet with `α = 1/γ` and `γ < 0` is negative
/// Weibull with `α = −1/γ`; each sub-family is used in its classical form
/// (`G_{1/γ}((x − 1)/γ)` and `G_{−1/γ}(−(x + 1)/γ)` in the `γ` location-scale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevSpec {
    pub gamma: f64,
    pub norming: Norming,
}

impl GevSpec {
    pub fn gumbel() -> Self {
        Self { gamma: 0.0, norming: Norming::Gaussian }
    }

    pub fn frechet(alpha: f64) -> Self {
        Self { gamma: 1.0 / alpha, norming: Norming::Frechet { alpha } }
    }

    pub fn neg_weibull(alpha: f64) -> Self {
        Self { gamma: -1.0 / alpha, norming: Norming::UnitEndpoint }
    }

    pub fn family(&self) -> GevFamily {
        if self.gamma == 0.0 {
            GevFamily::Gumbel
        } else if self.gamma > 0.0 {
            GevFamily::Frechet { alpha: 1.0 / self.gamma }
        } else {
            GevFamily::NegWeibull { alpha: -1.0 / self.gamma }
        }
    }

    /// `(lo, hi)` of the support.
    pub fn support(&self) -> (f64, f64) {
        match self.family() {
            GevFamily::Gumbel => (f64::NEG_INFINITY, f64::INFINITY),
            GevFamily::Frechet { .. } => (0.0, f64::INFINITY),
            GevFamily::NegWeibull { .. } => (f64::NEG_INFINITY, 0.0),
        }
    }

    pub fn norming(&self, n: u64) -> Result<(f64, f64)> {
        match self.norming {
            Norming::Gaussian => gaussian_norming(n),
            Norming::Frechet { alpha } => Ok(((n as f64).powf(1.0 / alpha), 0.0)),
            Norming::UnitEndpoint => Ok((1.0 / n as f64, 1.0)),
            Norming::Fixed { a, b } => Ok((a, b)),
        }
    }
}

/// `−log G(x)`, infinite below the support and zero above it.
fn neg_log_g(x: f64, spec: &GevSpec) -> f64 {
    match spec.family() {
        GevFamily::Gumbel => (-x).exp(),
        GevFamily::Frechet { alpha } => {
            if x <= 0.0 {
                f64::INFINITY
            } else {
                x.powf(-alpha)
            }
        }
        GevFamily::NegWeibull { alpha } => {
            if x >= 0.0 {
                0.0
            } else {
                (-x).powf(alpha)
            }
        }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("theta must lie in (0, 1], got {theta}")));
    }
    Ok(())
}

/// `G_γ(x)^θ`.
pub fn gev_cdf(x: f64, spec: &GevSpec, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok((-theta * neg_log_g(x, spec)).exp())
}

/// Density of `G_γ^θ`.
pub fn gev_pdf(x: f64, spec: &GevSpec, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let v = neg_log_g(x, spec);
    if v == 0.0 || !v.is_finite() {
        return Ok(0.0);
    }
    // d/dx (−V(x)) with V = −log G
    let dv = match spec.family() {
        GevFamily::Gumbel => (-x).exp(),
        GevFamily::Frechet { alpha } => alpha * x.powf(-alpha - 1.0),
        GevFamily::NegWeibull { alpha } => alpha * (-x).powf(alpha - 1.0),
    };
    Ok(theta * dv * (-theta * v).exp())
}

/// Limiting value of `P(R_n = 1)`; an approximation only, `1/(nθ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Approximation(pub f64);

pub fn asymptotic_record_prob(theta: f64, n: u64) -> Result<Approximation> {
    check_theta(theta)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    Ok(Approximation((1.0 / (n as f64 * theta)).min(1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    AnalyticChernick,
    AnalyticStableMa,
    AnalyticHsing,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalIndex {
    pub theta: f64,
    pub abs_error: f64,
    pub provenance: Provenance,
    /// Limit law and norming of the family, when known.
    pub limit: Option<GevSpec>,
    /// Bootstrap interval for empirical estimates.
    pub ci: Option<(f64, f64)>,
    /// Set when an empirical estimate falls outside (0, 1].
    pub flagged: bool,
}

impl ExtremalIndex {
    fn analytic(theta: f64, abs_error: f64, provenance: Provenance, limit: GevSpec) -> Self {
        Self { theta, abs_error, provenance, limit: Some(limit), ci: None, flagged: false }
    }
}

/// AR(1) with uniform innovations on `{0, 1/m, …, (m−1)/m}`: `θ = (m − 1)/m`,
/// limit `e^{θx}` on `x < 0` under `a_n = 1/n`, `b_n = 1`.
pub fn chernick_theta(m: u32) -> Result<ExtremalIndex> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("m must be at least 2, got {m}")));
    }
    Ok(ExtremalIndex::analytic((m - 1) as f64 / m as f64, 0.0, Provenance::AnalyticChernick, GevSpec::neg_weibull(1.0)))
}

/// `k_α = Γ(α) sin(απ/2)/π`.
pub fn stable_tail_constant(alpha: f64) -> f64 {
    statrs::function::gamma::gamma(alpha) * (alpha * PI / 2.0).sin() / PI
}

/// Moving average of iid stable noise: `θ = k_α (c₊^α (1 + κ) + c₋^α (1 − κ))`.
///
/// The value includes the stable tail constant and is not clamped to (0, 1].
pub fn stable_ma_theta(coeffs: &[f64], alpha: f64, kappa: f64) -> Result<ExtremalIndex> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 2], got {alpha}")));
    }
    if !(kappa.abs() <= 1.0) {
        return Err(Error::InvalidArgument(format!("kappa must lie in [-1, 1], got {kappa}")));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("coefficients must be finite".into()));
    }
    if coeffs.iter().all(|&c| c == 0.0) {
        return Err(Error::AllZeroCoefficients);
    }
    let c_plus = coeffs.iter().fold(0.0f64, |m, &c| m.max(c));
    let c_minus = coeffs.iter().fold(0.0f64, |m, &c| m.max(-c));
    let theta = stable_tail_constant(alpha) * (c_plus.powf(alpha) * (1.0 + kappa) + c_minus.powf(alpha) * (1.0 - kappa));
    Ok(ExtremalIndex::analytic(theta, 0.0, Provenance::AnalyticStableMa, GevSpec::frechet(alpha)))
}

/// Gaussian maximum norming constants.
pub fn gaussian_norming(n: u64) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("Gaussian norming needs n >= 3, got {n}")));
    }
    let ln = (n as f64).ln();
    let a = (2.0 * ln).powf(-0.5);
    Ok((a, 1.0 / a - a * (ln.ln() + (4.0 * PI).ln()) / 2.0))
}

/// Correlation of the limiting Gaussian vector indexed by `K`, with `δ_0 = 0`.
fn hsing_sigma(k: &[usize], deltas: &BTreeMap<usize, f64>) -> Result<DMatrix<f64>> {
    let delta = |lag: usize| -> Result<f64> {
        if lag == 0 {
            return Ok(0.0);
        }
        deltas.get(&lag).copied().ok_or(Error::MissingDelta { lag })
    };
    let q = k.len();
    let mut s = DMatrix::identity(q, q);
    for a in 0..q {
        for b in 0..a {
            let (da, db) = (deltas[&k[a]], deltas[&k[b]]);
            let v = (da + db - delta(k[a].abs_diff(k[b]))?) / (2.0 * (da * db).sqrt());
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    if s.iter().any(|v| !v.is_finite() || v.abs() > 1.0 + 1e-12) {
        return Err(Error::InvalidDeltaMatrix { min_eig: f64::NEG_INFINITY });
    }
    let min_eig = s.clone().symmetric_eigen().eigenvalues.min();
    if min_eig < -1e-10 {
        return Err(Error::InvalidDeltaMatrix { min_eig });
    }
    if min_eig < 1e-10 {
        // singular but PSD: regularize and restore the unit diagonal
        s += DMatrix::identity(q, q) * 1e-9;
        s /= 1.0 + 1e-9;
    }
    Ok(s)
}

/// Triangular Gaussian array with `n(1 − ρ_{k,n}) log n → δ_k`:
/// `θ = E_U Φ_{|K|}(√δ_k − U/(2√δ_k); Σ)`, `U ~ Exp(1)`.
///
/// `deltas` maps lags `k ≥ 1` to `δ_k ∈ (0, ∞]`; `K` is the set of finite entries.
/// Σ needs `δ_{|i−j|}` for every pair in `K`, so those lags must be present.
/// The expectation uses Gauss–Laguerre quadrature, doubling the order from 16
/// until two successive orders agree within the tolerance.
pub fn hsing_theta(deltas: &BTreeMap<usize, f64>, num: &Numerics) -> Result<ExtremalIndex> {
    if let Some((&k, &d)) = deltas.iter().find(|(&k, &d)| k == 0 || !(d > 0.0)) {
        return Err(Error::InvalidArgument(format!("need lag >= 1 and delta > 0, got delta_{k} = {d}")));
    }
    let k: Vec<usize> = deltas.iter().filter(|(_, d)| d.is_finite()).map(|(&k, _)| k).collect();
    let limit = GevSpec::gumbel();
    if k.is_empty() {
        return Ok(ExtremalIndex::analytic(1.0, 0.0, Provenance::AnalyticHsing, limit));
    }
    let sigma = CorrMatrix::new(hsing_sigma(&k, deltas)?)?;
    let sq: Vec<f64> = k.iter().map(|i| deltas[i].sqrt()).collect();
    let q = k.len();
    let tol = num.tol_for(q);
    let inner = Numerics { tol: Some((tol / 10.0).max(1e-8)), ..*num };
    let integrand = |u: f64, node: u64| -> Result<Estimate> {
        let hi: Vec<f64> = sq.iter().map(|s| s - u / (2.0 * s)).collect();
        let p = MvnProblem::orthant(hi, sigma.clone())?;
        Ok(mvn_cdf_with(&p, &inner.child(&[node]))?.estimate())
    };
    let rule = |order: usize| -> Result<Estimate> {
        let (x, w) = gauss_laguerre(order);
        let vals: Vec<Result<Estimate>> = x.par_iter().enumerate().map(|(i, &u)| integrand(u, (order * 1000 + i) as u64)).collect();
        let mut acc = Estimate::exact(0.0);
        for (v, wi) in vals.into_iter().zip(&w) {
            let v = v?;
            acc = acc + Estimate { value: wi * v.value, abs_error: wi * v.abs_error, converged: v.converged };
        }
        Ok(acc)
    };
    let mut order = 16;
    let mut prev = rule(order)?;
    loop {
        let next = rule(2 * order)?;
        let gap = (next.value - prev.value).abs();
        order *= 2;
        if gap <= tol || order >= 256 {
            let theta = next.value.clamp(0.0, 1.0);
            return Ok(ExtremalIndex {
                theta,
                abs_error: gap + next.abs_error,
                provenance: Provenance::AnalyticHsing,
                limit: Some(limit),
                ci: None,
                flagged: gap > tol,
            });
        }
        prev = next;
    }
}

//! Multivariate normal rectangle probabilities and sampling.
//!
//! Dimension 1 uses Φ, dimension 2 uses Gauss–Legendre quadrature, higher
//! dimensions use randomized quasi-Monte-Carlo on the separation-of-variables
//! transform. Coordinates with both limits infinite are marginalized out first.

pub mod bvn;
mod sov;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, CorrMatrix};
use crate::normal;
use crate::numerics::{Numerics, MIN_TOL};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Query `P(lower ≤ X ≤ upper)` for `X ~ N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnProblem {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub mean: Vec<f64>,
    pub cov: CorrMatrix,
}

impl MvnProblem {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, mean: Vec<f64>, cov: CorrMatrix) -> Result<Self> {
        let d = cov.dim();
        if lower.len() != d || upper.len() != d || mean.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "limits/mean lengths ({}, {}, {}) vs covariance dimension {d}",
                lower.len(),
                upper.len(),
                mean.len()
            )));
        }
        if let Some(i) = (0..d).find(|&i| !(lower[i] < upper[i]) || lower[i].is_nan()) {
            return Err(Error::InvalidArgument(format!("lower[{i}] = {} is not below upper[{i}] = {}", lower[i], upper[i])));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidArgument("mean must be finite".into()));
        }
        Ok(Self { lower, upper, mean, cov })
    }

    /// Lower orthant `P(X ≤ upper)` for a centred normal.
    pub fn orthant(upper: Vec<f64>, cov: CorrMatrix) -> Result<Self> {
        let d = cov.dim();
        Self::new(vec![f64::NEG_INFINITY; d], upper, vec![0.0; d], cov)
    }

    pub fn dim(&self) -> usize {
        self.cov.dim()
    }
}

/// Probability estimate from [`mvn_cdf`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvnResult {
    pub value: f64,
    /// Three standard errors of the randomized estimate (round-off level for dim ≤ 2).
    pub abs_error: f64,
    pub points_used: usize,
    pub converged: bool,
}

impl MvnResult {
    fn exact(value: f64) -> Self {
        Self { value: value.clamp(0.0, 1.0), abs_error: 1e-15, points_used: 0, converged: true }
    }

    pub fn estimate(&self) -> crate::numerics::Estimate {
        crate::numerics::Estimate { value: self.value, abs_error: self.abs_error, converged: self.converged }
    }
}

/// Rectangle probability with default engine settings.
pub fn mvn_cdf(p: &MvnProblem, tol: f64, seed: u64) -> Result<MvnResult> {
    mvn_cdf_with(p, &Numerics { tol: Some(tol), seed, ..Numerics::default() })
}

/// Rectangle probability with explicit settings.
pub fn mvn_cdf_with(p: &MvnProblem, num: &Numerics) -> Result<MvnResult> {
    let d0 = p.dim();
    if d0 > num.max_dim {
        return Err(Error::DimensionCap { dim: d0, cap: num.max_dim });
    }
    let tol = num.tol_for(d0);
    if !(tol >= MIN_TOL) {
        return Err(Error::InvalidArgument(format!("tol = {tol:e} must be at least {MIN_TOL:e}")));
    }
    cholesky(&p.cov)?;
    let keep: Vec<usize> = (0..d0).filter(|&i| p.lower[i].is_finite() || p.upper[i].is_finite()).collect();
    let d = keep.len();
    let m = p.cov.matrix();
    let sd: Vec<f64> = keep.iter().map(|&i| m[(i, i)].sqrt()).collect();
    let lo: Vec<f64> = keep.iter().zip(&sd).map(|(&i, s)| (p.lower[i] - p.mean[i]) / s).collect();
    let hi: Vec<f64> = keep.iter().zip(&sd).map(|(&i, s)| (p.upper[i] - p.mean[i]) / s).collect();
    let corr = |a: usize, b: usize| m[(keep[a], keep[b])] / (sd[a] * sd[b]);
    match d {
        0 => Ok(MvnResult::exact(1.0)),
        1 => Ok(MvnResult::exact(normal::cdf(hi[0]) - normal::cdf(lo[0]))),
        2 => Ok(MvnResult::exact(bvn::bvn_rect(lo[0], hi[0], lo[1], hi[1], corr(0, 1).clamp(-1.0, 1.0)))),
        _ => {
            let cov: Vec<Vec<f64>> = (0..d).map(|a| (0..d).map(|b| if a == b { 1.0 } else { corr(a, b) }).collect()).collect();
            let s = sov::Sov::new(&lo, &hi, &cov);
            let out = sov::integrate(&s, tol, num.seed, num.randomizations.max(2), num.max_evals);
            Ok(MvnResult { value: out.value, abs_error: 3.0 * out.std_error, points_used: out.evals, converged: out.converged })
        }
    }
}

/// `n_paths` iid draws of `N(mean, cov)` as rows; row `i` uses stream `(seed, i)`.
pub fn mvn_sample(n_paths: usize, mean: &[f64], cov: &CorrMatrix, seed: u64) -> Result<DMatrix<f64>> {
    let d = cov.dim();
    if mean.len() != d {
        return Err(Error::DimensionMismatch(format!("mean length {} vs dimension {d}", mean.len())));
    }
    let l = cholesky(cov)?;
    let rows: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::rng::stream(seed, i as u64);
            let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            let x = l.mul_vec(&z);
            (0..d).map(|k| x[k] + mean[k]).collect()
        })
        .collect();
    Ok(DMatrix::from_fn(n_paths, d, |i, j| rows[i][j]))
}

//! The one routine that assembles Γ, ϱ and the conditional correlation for every
//! record law.
//!
//! Setting: `X ~ N(0, R)`. Condition on `X_I = z`. Each complement variable `X_c`
//! must satisfy `lo_c < X_c − (B z)_c ≤ hi_c`, where row `c` of the selector `B`
//! is either a unit vector (stay below a conditioning variable) or zero (a fixed
//! level). With `M = S_CI S_II⁻¹`, `σ²` the conditional variances and `Σ̄` the
//! conditional correlation,
//!
//! ```text
//! ϱ = diag(σ)⁻¹ (B − M),      Γ = ϱ S_II ϱᵀ + Σ̄,
//! ```
//!
//! and the event probability integrated over a region of `z` is the unnormalized
//! mass of `CSN(0, S_II, ϱ, μ = −hi/σ, Σ̄)` over that region. Without a region it
//! is the Gaussian rectangle `P(lo/σ < W ≤ hi/σ)`, `W ~ N(0, Γ)`.
//!
//! Indices here are 0-based time indices.

use crate::csn::CsnParams;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, condition_on, CorrMatrix};
use crate::mvn::{mvn_cdf_with, MvnProblem};
use crate::numerics::{Estimate, Numerics};
use nalgebra::DMatrix;

const DEGENERATE: f64 = 1e-12;

/// Constraint on one complement variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    /// Position in the conditioning list of the variable to compare with, if any.
    pub selector: Option<usize>,
    pub lo: f64,
    pub hi: f64,
}

impl Constraint {
    /// `X_c < X_{I[k]}`.
    pub fn below(k: usize) -> Self {
        Self { selector: Some(k), lo: f64::NEG_INFINITY, hi: 0.0 }
    }

    /// `X_c ≤ level`.
    pub fn level(level: f64) -> Self {
        Self { selector: None, lo: f64::NEG_INFINITY, hi: level }
    }
}

/// Γ, ϱ and Σ̄ for one conditioning pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaConstruction {
    pub cond_idx: Vec<usize>,
    pub comp_idx: Vec<usize>,
    /// `S_II`.
    pub omega: CorrMatrix,
    /// ϱ, |C|×|I|.
    pub varrho: DMatrix<f64>,
    /// Σ̄, the standardized conditional correlation of the complement.
    pub cond_corr: CorrMatrix,
    /// σ, conditional standard deviations.
    pub std_diag: Vec<f64>,
    /// Standardized limits `lo/σ`, `hi/σ` on the latent `W ~ N(0, Γ)`.
    pub latent_lo: Vec<f64>,
    pub latent_hi: Vec<f64>,
    pub gamma: CorrMatrix,
}

impl GammaConstruction {
    pub fn build(r: &CorrMatrix, cond: &[usize], comp: &[usize], cons: &[Constraint]) -> Result<Self> {
        assert_eq!(comp.len(), cons.len(), "one constraint per complement index");
        assert!(!cond.is_empty(), "conditioning set must be non-empty");
        for (&c, k) in comp.iter().zip(cons) {
            if let Some(s) = k.selector {
                assert!(s < cond.len(), "selector out of range");
                let rho = r.get(c, cond[s]);
                if rho.abs() >= 1.0 - DEGENERATE {
                    return Err(Error::DegenerateCorrelation { i: c + 1, n: cond[s] + 1, rho });
                }
            }
        }
        for (a, &i) in cond.iter().enumerate() {
            for &j in &cond[..a] {
                let rho = r.get(i, j);
                if rho.abs() >= 1.0 - DEGENERATE {
                    return Err(Error::DegenerateCorrelation { i: j + 1, n: i + 1, rho });
                }
            }
        }
        let omega = r.submatrix(cond);
        cholesky(&omega)?;
        let q = cond.len();
        if comp.is_empty() {
            return Ok(Self {
                cond_idx: cond.to_vec(),
                comp_idx: vec![],
                omega,
                varrho: DMatrix::zeros(0, q),
                cond_corr: CorrMatrix::identity(0),
                std_diag: vec![],
                latent_lo: vec![],
                latent_hi: vec![],
                gamma: CorrMatrix::identity(0),
            });
        }
        let cg = condition_on(r, cond, comp)?;
        let p = comp.len();
        if let Some(a) = (0..p).find(|&a| cg.std_diag[a] < 1e-7) {
            let s = cons[a].selector.unwrap_or(0);
            return Err(Error::DegenerateCorrelation { i: comp[a] + 1, n: cond[s] + 1, rho: r.get(comp[a], cond[s]) });
        }
        let sd = &cg.std_diag;
        let varrho = DMatrix::from_fn(p, q, |a, b| {
            let sel = if cons[a].selector == Some(b) { 1.0 } else { 0.0 };
            (sel - cg.mean_map[(a, b)]) / sd[a]
        });
        let g = &varrho * omega.matrix() * varrho.transpose() + cg.cond_corr.matrix();
        let gamma = CorrMatrix::new((&g + g.transpose()) * 0.5)?;
        let latent_lo = (0..p).map(|a| cons[a].lo / sd[a]).collect();
        let latent_hi = (0..p).map(|a| cons[a].hi / sd[a]).collect();
        Ok(Self {
            cond_idx: cond.to_vec(),
            comp_idx: comp.to_vec(),
            omega,
            varrho,
            cond_corr: cg.cond_corr,
            std_diag: cg.std_diag,
            latent_lo,
            latent_hi,
            gamma,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.comp_idx.len()
    }

    /// Γ̄: Γ rescaled to unit diagonal.
    pub fn gamma_bar(&self) -> CorrMatrix {
        self.gamma.standardize().0
    }

    /// Residual of `Γ − (Σ̄ + ϱ S_II ϱᵀ)` in max norm.
    pub fn residual(&self) -> f64 {
        let g = self.cond_corr.matrix() + &self.varrho * self.omega.matrix() * self.varrho.transpose();
        (self.gamma.matrix() - g).amax()
    }

    /// `P(lo/σ < W ≤ hi/σ)`: the probability of the complement constraints alone.
    pub fn latent_prob(&self, num: &Numerics) -> Result<Estimate> {
        let p = self.latent_dim();
        if p == 0 {
            return Ok(Estimate::exact(1.0));
        }
        let prob = MvnProblem::new(self.latent_lo.clone(), self.latent_hi.clone(), vec![0.0; p], self.gamma.clone())?;
        Ok(mvn_cdf_with(&prob, num)?.estimate())
    }

    /// The CSN law of `X_I` given the complement constraints (upper limits only).
    pub fn csn(&self) -> Result<CsnParams> {
        if self.latent_lo.iter().any(|v| *v != f64::NEG_INFINITY) {
            return Err(Error::InvalidArgument("CSN form needs one-sided constraints".into()));
        }
        let mu = self.latent_hi.iter().map(|h| -h).collect();
        CsnParams::new(vec![0.0; self.cond_idx.len()], self.omega.clone(), self.varrho.clone(), mu, self.cond_corr.clone())
    }

    /// Unnormalized mass of `{lo ≤ A z ≤ hi}` together with the complement constraints.
    pub fn mass(&self, a: &DMatrix<f64>, lo: &[f64], hi: &[f64], num: &Numerics) -> Result<Estimate> {
        self.csn()?.mass_rect(a, lo, hi, num)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ar1(n: usize, phi: f64) -> CorrMatrix {
        CorrMatrix::new(DMatrix::from_fn(n, n, |i, j| phi.powi(i.abs_diff(j) as i32))).unwrap()
    }

    #[test]
    fn single_record_matches_closed_entries() {
        let r = ar1(5, 0.5);
        let n = 4;
        let comp: Vec<usize> = (0..n).collect();
        let g = GammaConstruction::build(&r, &[n], &comp, &vec![Constraint::below(0); n]).unwrap();
        assert!(g.residual() < 1e-12);
        let gb = g.gamma_bar();
        for i in 0..n {
            let rin = r.get(i, n);
            let want_rho = ((1.0 - rin) / (1.0 + rin)).sqrt();
            assert!((g.varrho[(i, 0)] - want_rho).abs() < 1e-12);
            for j in 0..n {
                if i == j {
                    continue;
                }
                let rjn = r.get(j, n);
                let want = (1.0 + r.get(i, j) - rin - rjn) / (2.0 * ((1.0 - rin) * (1.0 - rjn)).sqrt());
                assert!((gb.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_pair_is_reported() {
        let r = CorrMatrix::new(DMatrix::from_element(3, 3, 1.0)).unwrap();
        let e = GammaConstruction::build(&r, &[2], &[0, 1], &[Constraint::below(0); 2]).unwrap_err();
        assert!(matches!(e, Error::DegenerateCorrelation { i: 1, n: 3, .. }));
    }
}

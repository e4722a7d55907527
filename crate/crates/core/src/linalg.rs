//! Dense symmetric matrices: validation, Cholesky, conditional Gaussian blocks.
//!
//! Indices in this module are 0-based.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

const SYM_TOL: f64 = 1e-12;

/// Symmetric matrix holding a correlation or covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrMatrix {
    m: DMatrix<f64>,
}

impl CorrMatrix {
    /// Validates squareness, finiteness and symmetry, then symmetrizes.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!("matrix is {}x{}, expected square", m.nrows(), m.ncols())));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                let gap = (a - b).abs();
                if gap > SYM_TOL * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::NotSymmetric { i, j, gap });
                }
            }
        }
        let m = (&m + m.transpose()) * 0.5;
        Ok(Self { m })
    }

    /// As [`CorrMatrix::new`], additionally requiring unit diagonal and entries in [-1, 1].
    pub fn correlation(m: DMatrix<f64>) -> Result<Self> {
        let c = Self::new(m)?;
        if !c.is_correlation() {
            return Err(Error::InvalidArgument("correlation matrix needs unit diagonal and entries in [-1, 1]".into()));
        }
        Ok(c)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("rows of unequal length".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn is_correlation(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (self.m[(i, i)] - 1.0).abs() <= SYM_TOL) && self.m.iter().all(|v| v.abs() <= 1.0 + SYM_TOL)
    }

    /// Principal submatrix on `idx`, in the given order.
    pub fn submatrix(&self, idx: &[usize]) -> CorrMatrix {
        CorrMatrix { m: DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.m[(idx[i], idx[j])]) }
    }

    /// Adds `eps` to the diagonal (explicit opt-in regularization).
    pub fn with_jitter(&self, eps: f64) -> CorrMatrix {
        let n = self.dim();
        CorrMatrix { m: &self.m + DMatrix::identity(n, n) * eps }
    }

    /// Rescales to unit diagonal; returns the correlation form and the standard deviations.
    pub fn standardize(&self) -> (CorrMatrix, Vec<f64>) {
        let sd: Vec<f64> = (0..self.dim()).map(|i| self.m[(i, i)].sqrt()).collect();
        let n = self.dim();
        let mut m = DMatrix::from_fn(n, n, |i, j| self.m[(i, j)] / (sd[i] * sd[j]));
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        (CorrMatrix { m }, sd)
    }

    pub fn is_positive_definite(&self) -> bool {
        cholesky(self).is_ok()
    }
}

/// Lower-triangular Cholesky factor with positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerTriangularFactor {
    l: DMatrix<f64>,
}

impl LowerTriangularFactor {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Solves `L Lᵀ X = B`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let y = self.l.solve_lower_triangular(b).expect("nonsingular factor");
        self.l.transpose().solve_upper_triangular(&y).expect("nonsingular factor")
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    /// `L v`.
    pub fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.l * v
    }
}

/// Cholesky factorization; reports the 1-based leading minor that fails.
pub fn cholesky(m: &CorrMatrix) -> Result<LowerTriangularFactor> {
    cholesky_dense(m.matrix()).map(|l| LowerTriangularFactor { l })
}

pub(crate) fn cholesky_dense(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        // relative floor so round-off on a singular matrix is not mistaken for PD
        if !(d > 1e-14 * a[(j, j)].abs()) || d <= 0.0 {
            return Err(Error::NotPositiveDefinite { minor: j + 1 });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Law of the complement block given the conditioning block.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalGaussian {
    /// Conditioning indices, as given.
    pub cond_idx: Vec<usize>,
    /// Complement indices, ascending.
    pub comp_idx: Vec<usize>,
    /// `S_CI S_II⁻¹`, |C|×|I|.
    pub mean_map: DMatrix<f64>,
    /// `S_CC − S_CI S_II⁻¹ S_IC`.
    pub cond_cov: CorrMatrix,
    pub std_diag: Vec<f64>,
    pub cond_corr: CorrMatrix,
}

/// Conditions on `cond_idx`; the complement is every other index in ascending order.
pub fn condition(full: &CorrMatrix, cond_idx: &[usize]) -> Result<ConditionalGaussian> {
    let n = full.dim();
    let mut seen = vec![false; n];
    for &i in cond_idx {
        if i >= n || seen[i] {
            return Err(Error::InvalidArgument(format!("bad conditioning index {i}")));
        }
        seen[i] = true;
    }
    if cond_idx.is_empty() || cond_idx.len() == n {
        return Err(Error::EmptyPartition { dim: n });
    }
    let comp: Vec<usize> = (0..n).filter(|&i| !seen[i]).collect();
    condition_on(full, cond_idx, &comp)
}

/// Conditions the `comp` block on the `cond` block; other indices are marginalized out.
pub fn condition_on(full: &CorrMatrix, cond: &[usize], comp: &[usize]) -> Result<ConditionalGaussian> {
    if cond.is_empty() || comp.is_empty() {
        return Err(Error::EmptyPartition { dim: full.dim() });
    }
    let mut all: Vec<usize> = cond.iter().chain(comp).copied().collect();
    all.sort_unstable();
    all.dedup();
    if all.len() != cond.len() + comp.len() {
        return Err(Error::InvalidArgument("conditioning and complement sets overlap".into()));
    }
    cholesky(&full.submatrix(&all))?;

    let m = full.matrix();
    let s_ii = DMatrix::from_fn(cond.len(), cond.len(), |a, b| m[(cond[a], cond[b])]);
    let s_ci = DMatrix::from_fn(comp.len(), cond.len(), |a, b| m[(comp[a], cond[b])]);
    let s_cc = DMatrix::from_fn(comp.len(), comp.len(), |a, b| m[(comp[a], comp[b])]);
    let f = cholesky(&CorrMatrix::new(s_ii)?)?;
    // S_II⁻¹ S_IC, then transpose
    let mean_map = f.solve(&s_ci.transpose()).transpose();
    let cov = &s_cc - &mean_map * s_ci.transpose();
    let cond_cov = CorrMatrix::new((&cov + cov.transpose()) * 0.5)?;
    let (cond_corr, std_diag) = cond_cov.standardize();
    Ok(ConditionalGaussian { cond_idx: cond.to_vec(), comp_idx: comp.to_vec(), mean_map, cond_cov, std_diag, cond_corr })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ar1(n: usize, phi: f64) -> CorrMatrix {
        CorrMatrix::new(DMatrix::from_fn(n, n, |i, j| phi.powi((i as i32 - j as i32).abs()))).unwrap()
    }

    #[test]
    fn cholesky_identity_and_2x2() {
        let l = cholesky(&CorrMatrix::identity(3)).unwrap();
        assert_eq!(l.matrix(), &DMatrix::<f64>::identity(3, 3));
        let m = CorrMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let l = cholesky(&m).unwrap();
        assert!((l.matrix()[(1, 0)] - 0.5).abs() < 1e-15);
        assert!((l.matrix()[(1, 1)] - 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cholesky_rejects_indefinite_equicorrelation() {
        let m = CorrMatrix::new(DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { -0.6 })).unwrap();
        // eigenvalue 1 + 2ρ = -0.2 < 0; fails at the third minor
        let eig = nalgebra::SymmetricEigen::new(m.matrix().clone());
        assert!(eig.eigenvalues.min() < 0.0);
        assert_eq!(cholesky(&m), Err(Error::NotPositiveDefinite { minor: 3 }));
    }

    #[test]
    fn asymmetry_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(CorrMatrix::new(m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn bivariate_conditioning() {
        let rho = 0.3;
        let m = CorrMatrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]]).unwrap();
        let c = condition(&m, &[1]).unwrap();
        assert!((c.mean_map[(0, 0)] - rho).abs() < 1e-15);
        assert!((c.cond_cov.get(0, 0) - (1.0 - rho * rho)).abs() < 1e-15);
        assert_eq!(c.cond_corr.get(0, 0), 1.0);
    }

    #[test]
    fn ar1_conditioning_matches_direct_formula() {
        let m = ar1(4, 0.5);
        let c = condition(&m, &[3]).unwrap();
        // direct: Cov(X_i, X_j | X_4) = ρ_ij − ρ_i4 ρ_j4
        for a in 0..3 {
            for b in 0..3 {
                let want = m.get(a, b) - m.get(a, 3) * m.get(b, 3);
                assert!((c.cond_cov.get(a, b) - want).abs() < 1e-12);
            }
            assert!((c.mean_map[(a, 0)] - m.get(a, 3)).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_partition() {
        let m = ar1(3, 0.2);
        assert!(matches!(condition(&m, &[]), Err(Error::EmptyPartition { .. })));
        assert!(matches!(condition(&m, &[0, 1, 2]), Err(Error::EmptyPartition { .. })));
    }
}

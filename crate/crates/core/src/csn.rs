//! Closed skew-normal laws `CSN_{m,n}(ξ, Ω, Δ, μ, Σ)`.
//!
//! Density `φ_m(x−ξ; Ω) Φ_n(Δ(x−ξ); μ, Σ) / Φ_n(0; μ, Γ)` with `Γ = Σ + ΔΩΔᵀ`,
//! where `Φ_n(y; μ, Σ) = P(V + μ ≤ y)` for `V ~ N(0, Σ)`. A latent dimension
//! `n = 0` is allowed and gives the plain Gaussian `N(ξ, Ω)`.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, CorrMatrix};
use crate::mvn::{mvn_cdf_with, MvnProblem};
use crate::numerics::{Estimate, Numerics};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const MIN_NORMALIZER: f64 = 1e-12;
const MIN_ACCEPTANCE: f64 = 1e-4;

/// Parameters of a closed skew-normal law.
#[derive(Debug, Clone, PartialEq)]
pub struct CsnParams {
    xi: Vec<f64>,
    omega: CorrMatrix,
    delta: DMatrix<f64>,
    mu: Vec<f64>,
    sigma: CorrMatrix,
    gamma: CorrMatrix,
}

/// Serialized form: dimensions header plus row-major blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsnBundle {
    pub m: usize,
    pub n: usize,
    pub xi: Vec<f64>,
    pub omega: Vec<Vec<f64>>,
    pub delta: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(r: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if r.len() != nrows || r.iter().any(|row| row.len() != ncols) {
        return Err(Error::DimensionMismatch(format!("expected a {nrows}x{ncols} block")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| r[i][j]))
}

impl CsnParams {
    pub fn new(xi: Vec<f64>, omega: CorrMatrix, delta: DMatrix<f64>, mu: Vec<f64>, sigma: CorrMatrix) -> Result<Self> {
        let m = omega.dim();
        let n = sigma.dim();
        if xi.len() != m || delta.ncols() != m || delta.nrows() != n || mu.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "xi {} / Omega {m} / Delta {}x{} / mu {} / Sigma {n}",
                xi.len(),
                delta.nrows(),
                delta.ncols(),
                mu.len()
            )));
        }
        if m == 0 {
            return Err(Error::InvalidArgument("CSN needs m >= 1".into()));
        }
        cholesky(&omega)?;
        if n > 0 {
            cholesky(&sigma)?;
        }
        let g = sigma.matrix() + &delta * omega.matrix() * delta.transpose();
        let gamma = CorrMatrix::new((&g + g.transpose()) * 0.5)?;
        if n > 0 {
            cholesky(&gamma)?;
        }
        Ok(Self { xi, omega, delta, mu, sigma, gamma })
    }

    /// `Ψ_{m,n}(·; Δ, Σ)`: ξ = 0, Ω = I, μ = 0.
    pub fn standard(delta: DMatrix<f64>, sigma: CorrMatrix) -> Result<Self> {
        let m = delta.ncols();
        Self::new(vec![0.0; m], CorrMatrix::identity(m), delta, vec![0.0; sigma.dim()], sigma)
    }

    /// `Ψ_{m,n}(·; Ω, Δ, Σ)`: ξ = 0, μ = 0.
    pub fn centred(omega: CorrMatrix, delta: DMatrix<f64>, sigma: CorrMatrix) -> Result<Self> {
        Self::new(vec![0.0; omega.dim()], omega, delta, vec![0.0; sigma.dim()], sigma)
    }

    pub fn m(&self) -> usize {
        self.omega.dim()
    }
    pub fn n(&self) -> usize {
        self.sigma.dim()
    }
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }
    pub fn omega(&self) -> &CorrMatrix {
        &self.omega
    }
    pub fn delta(&self) -> &DMatrix<f64> {
        &self.delta
    }
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }
    pub fn sigma(&self) -> &CorrMatrix {
        &self.sigma
    }
    /// `Γ = Σ + ΔΩΔᵀ`.
    pub fn gamma(&self) -> &CorrMatrix {
        &self.gamma
    }

    /// Copy with `μ` replaced.
    pub fn with_mu(&self, mu: Vec<f64>) -> Result<Self> {
        if mu.len() != self.n() {
            return Err(Error::DimensionMismatch("mu length".into()));
        }
        Ok(Self { mu, ..self.clone() })
    }

    pub fn to_bundle(&self) -> CsnBundle {
        CsnBundle {
            m: self.m(),
            n: self.n(),
            xi: self.xi.clone(),
            omega: rows(self.omega.matrix()),
            delta: rows(&self.delta),
            mu: self.mu.clone(),
            sigma: rows(self.sigma.matrix()),
        }
    }

    pub fn from_bundle(b: &CsnBundle) -> Result<Self> {
        Self::new(
            b.xi.clone(),
            CorrMatrix::new(from_rows(&b.omega, b.m, b.m)?)?,
            from_rows(&b.delta, b.n, b.m)?,
            b.mu.clone(),
            CorrMatrix::new(from_rows(&b.sigma, b.n, b.n)?)?,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_bundle()).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let b: CsnBundle = serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("CSN bundle: {e}")))?;
        Self::from_bundle(&b)
    }

    /// `Φ_n(0; μ, Γ)`, the probability of the latent condition.
    pub fn normalizer(&self, num: &Numerics) -> Result<Estimate> {
        if self.n() == 0 {
            return Ok(Estimate::exact(1.0));
        }
        let upper: Vec<f64> = self.mu.iter().map(|v| -v).collect();
        let p = MvnProblem::orthant(upper, self.gamma.clone())?;
        Ok(mvn_cdf_with(&p, num)?.estimate())
    }

    /// Unnormalized mass `P(lo ≤ A X₀ + Aξ ≤ hi, latent condition)` where `X₀ ~ N(0, Ω)`;
    /// dividing by [`CsnParams::normalizer`] gives the CSN probability of the region.
    pub fn mass_rect(&self, a: &DMatrix<f64>, lo: &[f64], hi: &[f64], num: &Numerics) -> Result<Estimate> {
        let (m, n, q) = (self.m(), self.n(), a.nrows());
        if a.ncols() != m || lo.len() != q || hi.len() != q {
            return Err(Error::DimensionMismatch(format!("A is {q}x{}, CSN has m = {m}", a.ncols())));
        }
        let aw = a * self.omega.matrix();
        let cross = -(&self.delta * aw.transpose()); // −ΔΩAᵀ, n×q
        let yy = &aw * a.transpose();
        let mut big = DMatrix::<f64>::zeros(n + q, n + q);
        big.view_mut((0, 0), (n, n)).copy_from(self.gamma.matrix());
        big.view_mut((0, n), (n, q)).copy_from(&cross);
        big.view_mut((n, 0), (q, n)).copy_from(&cross.transpose());
        big.view_mut((n, n), (q, q)).copy_from(&yy);
        let shift = a * DVector::from_column_slice(&self.xi);
        let mut lower = vec![f64::NEG_INFINITY; n];
        let mut upper: Vec<f64> = self.mu.iter().map(|v| -v).collect();
        lower.extend((0..q).map(|i| lo[i] - shift[i]));
        upper.extend((0..q).map(|i| hi[i] - shift[i]));
        let cov = CorrMatrix::new(big)?;
        let p = MvnProblem::new(lower, upper, vec![0.0; n + q], cov)?;
        Ok(mvn_cdf_with(&p, num)?.estimate())
    }

    /// CSN probability of `{lo ≤ A X ≤ hi}`.
    pub fn prob_rect(&self, a: &DMatrix<f64>, lo: &[f64], hi: &[f64], num: &Numerics) -> Result<Estimate> {
        let den = self.checked_normalizer(&num.child(&[0]))?;
        let mass = self.mass_rect(a, lo, hi, &num.child(&[1]))?;
        Ok(mass.ratio(den).clamp_unit())
    }

    fn checked_normalizer(&self, num: &Numerics) -> Result<Estimate> {
        let den = self.normalizer(num)?;
        if den.value < MIN_NORMALIZER {
            return Err(Error::DegenerateNormalization { value: den.value });
        }
        Ok(den)
    }

    /// CDF `Ψ_{m,n}(x)`: the ratio `Φ_{n+m}(x̃; Ω̃) / Φ_n(0; μ, Γ)` with
    /// `x̃ = (−μ, x−ξ)` and `Ω̃ = [[Γ, −ΔΩ], [−ΩΔᵀ, Ω]]`.
    pub fn cdf(&self, x: &[f64], num: &Numerics) -> Result<Estimate> {
        let m = self.m();
        self.prob_rect(&DMatrix::identity(m, m), &vec![f64::NEG_INFINITY; m], x, num)
    }

    /// Density, with the error of the two Gaussian probabilities propagated.
    pub fn pdf(&self, x: &[f64], num: &Numerics) -> Result<Estimate> {
        let m = self.m();
        if x.len() != m {
            return Err(Error::DimensionMismatch("x length".into()));
        }
        let l = cholesky(&self.omega)?;
        let z = DVector::from_fn(m, |i, _| x[i] - self.xi[i]);
        let sol = l.matrix().solve_lower_triangular(&z).expect("nonsingular");
        let log_phi = -0.5 * sol.norm_squared() - 0.5 * l.log_det() - 0.5 * m as f64 * (2.0 * std::f64::consts::PI).ln();
        let phi = log_phi.exp();
        if self.n() == 0 {
            return Ok(Estimate::exact(phi));
        }
        let dz = &self.delta * &z;
        let upper: Vec<f64> = (0..self.n()).map(|i| dz[i] - self.mu[i]).collect();
        let p = MvnProblem::orthant(upper, self.sigma.clone())?;
        let num_est = mvn_cdf_with(&p, &num.child(&[1]))?.estimate();
        let den = self.checked_normalizer(&num.child(&[0]))?;
        let r = num_est.ratio(den);
        Ok(Estimate::new(phi * r.value, phi * r.abs_error))
    }

    /// Law of `A X + b`. Requires `A` (q×m, q ≤ m) of full row rank.
    pub fn affine(&self, a: &DMatrix<f64>, b: &[f64]) -> Result<CsnParams> {
        let (q, m) = (a.nrows(), self.m());
        if a.ncols() != m || b.len() != q {
            return Err(Error::DimensionMismatch(format!("A is {q}x{}, b has {}, m = {m}", a.ncols(), b.len())));
        }
        if q == 0 || q > m {
            return Err(Error::RankDeficient);
        }
        let aw = a * self.omega.matrix();
        let os = CorrMatrix::new(&aw * a.transpose()).map_err(|_| Error::RankDeficient)?;
        let f = cholesky(&os).map_err(|_| Error::RankDeficient)?;
        // Δ* = ΔΩAᵀ(Ω*)⁻¹
        let dwa = &self.delta * aw.transpose();
        let ds = f.solve(&dwa.transpose()).transpose();
        let ss = self.gamma.matrix() - &ds * aw * self.delta.transpose();
        let sigma = CorrMatrix::new((&ss + ss.transpose()) * 0.5)?;
        let xi_v = a * DVector::from_column_slice(&self.xi);
        let xi = (0..q).map(|i| xi_v[i] + b[i]).collect();
        CsnParams::new(xi, os, ds, self.mu.clone(), sigma)
    }

    /// Exact draws via `X = U | Δ(U−ξ) + V > μ`, `U ~ N(ξ, Ω)`, `V ~ N(0, Σ)`.
    /// Row `i` uses stream `(seed, i)`. Returns the sample and the acceptance rate.
    pub fn sample(&self, n_paths: usize, seed: u64) -> Result<(DMatrix<f64>, f64)> {
        let (m, n) = (self.m(), self.n());
        let lo = cholesky(&self.omega)?;
        let ls = if n > 0 { Some(cholesky(&self.sigma)?) } else { None };
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> (DVector<f64>, bool) {
            let z = DVector::from_fn(m, |_, _| StandardNormal.sample(rng));
            let u = lo.mul_vec(&z);
            let Some(ls) = &ls else { return (u, true) };
            let e = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
            let w = &self.delta * &u + ls.mul_vec(&e);
            let ok = (0..n).all(|k| w[k] > self.mu[k]);
            (u, ok)
        };
        // pilot run guards against an effectively endless loop
        let mut pilot = crate::rng::stream(seed, u64::MAX);
        let (mut tried, mut hit) = (0usize, 0usize);
        while tried < 1_000_000 && hit < 200 {
            tried += 1;
            hit += draw(&mut pilot).1 as usize;
        }
        let rate = hit as f64 / tried as f64;
        if rate < MIN_ACCEPTANCE {
            return Err(Error::AcceptanceTooLow { rate, min: MIN_ACCEPTANCE });
        }
        let rows: Vec<(Vec<f64>, usize)> = (0..n_paths)
            .into_par_iter()
            .map(|i| {
                let mut rng = crate::rng::stream(seed, i as u64);
                let mut k = 0;
                loop {
                    k += 1;
                    let (u, ok) = draw(&mut rng);
                    if ok {
                        return ((0..m).map(|j| u[j] + self.xi[j]).collect(), k);
                    }
                }
            })
            .collect();
        let total: usize = rows.iter().map(|r| r.1).sum();
        let acc = if n_paths == 0 { rate } else { n_paths as f64 / total as f64 };
        Ok((DMatrix::from_fn(n_paths, m, |i, j| rows[i].0[j]), acc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal;

    fn skew_normal() -> CsnParams {
        CsnParams::standard(DMatrix::from_element(1, 1, 1.0), CorrMatrix::identity(1)).unwrap()
    }

    fn num() -> Numerics {
        Numerics::with_seed(11)
    }

    #[test]
    fn skew_normal_cdf_and_pdf() {
        let p = skew_normal();
        assert_eq!(p.gamma().get(0, 0), 2.0);
        let c = p.cdf(&[0.0], &num()).unwrap();
        assert!((c.value - 0.25).abs() < 1e-12, "{c:?}");
        for &x in &[-1.5, 0.0, 0.7, 2.0] {
            let d = p.pdf(&[x], &num()).unwrap();
            assert!((d.value - 2.0 * normal::pdf(x) * normal::cdf(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_skewness_reduces_to_gaussian() {
        let omega = CorrMatrix::from_rows(&[vec![1.0, 0.4, 0.1], vec![0.4, 2.0, -0.3], vec![0.1, -0.3, 1.5]]).unwrap();
        let sigma = CorrMatrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 1.0]]).unwrap();
        let p = CsnParams::new(vec![0.1, -0.2, 0.3], omega.clone(), DMatrix::zeros(2, 3), vec![0.3, -0.1], sigma).unwrap();
        let x = [0.5, 0.2, 1.0];
        let want = mvn_cdf_with(&MvnProblem::new(vec![f64::NEG_INFINITY; 3], x.to_vec(), vec![0.1, -0.2, 0.3], omega).unwrap(), &num()).unwrap();
        let got = p.cdf(&x, &num()).unwrap();
        assert!((got.value - want.value).abs() < 3.0 * (got.abs_error + want.abs_error) + 1e-12);
    }

    #[test]
    fn affine_identity_and_shift() {
        let p = skew_normal();
        let same = p.affine(&DMatrix::identity(1, 1), &[0.0]).unwrap();
        assert!((same.sigma().get(0, 0) - 1.0).abs() < 1e-14);
        assert!((same.delta()[(0, 0)] - 1.0).abs() < 1e-14);
        let shifted = p.affine(&DMatrix::identity(1, 1), &[2.5]).unwrap();
        assert_eq!(shifted.xi(), &[2.5]);
        assert_eq!(shifted.gamma(), p.gamma());
    }

    #[test]
    fn rank_deficient_map_is_rejected() {
        let p = CsnParams::standard(DMatrix::from_row_slice(1, 2, &[1.0, 0.5]), CorrMatrix::identity(1)).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        assert_eq!(p.affine(&a, &[0.0, 0.0]), Err(Error::RankDeficient));
    }

    #[test]
    fn bundle_round_trip() {
        let p = skew_normal().affine(&DMatrix::from_element(1, 1, 2.0), &[1.0]).unwrap();
        let back = CsnParams::from_json(&p.to_json()).unwrap();
        assert_eq!(back.to_bundle(), p.to_bundle());
    }

    #[test]
    fn sampler_mean_of_skew_normal() {
        let (s, acc) = skew_normal().sample(200_000, 3).unwrap();
        let mean = s.column(0).mean();
        let sd = (s.column(0).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / s.nrows() as f64).sqrt();
        let want = 1.0 / std::f64::consts::PI.sqrt();
        assert!((mean - want).abs() < 3.0 * sd / (s.nrows() as f64).sqrt(), "{mean}");
        assert!((acc - 0.5).abs() < 0.01);
        assert_eq!(skew_normal().sample(0, 1).unwrap().0.nrows(), 0);
    }

    #[test]
    fn low_acceptance_is_an_error() {
        let p = skew_normal().with_mu(vec![7.0]).unwrap();
        assert!(matches!(p.sample(10, 1), Err(Error::AcceptanceTooLow { .. })));
    }
}

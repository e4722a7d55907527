//! Shared numerical settings and the value-with-error type.

use serde::{Deserialize, Serialize};

/// Default dimension cap for Gaussian integrals.
pub const DEFAULT_MAX_DIM: usize = 30;
/// Smallest tolerance the Gaussian integrator accepts.
pub const MIN_TOL: f64 = 1e-8;
/// Largest factor by which [`Numerics::for_ratio`] tightens a tolerance.
pub const MAX_RATIO_TIGHTENING: f64 = 10.0;

/// Settings threaded through every integral-backed computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    /// Absolute tolerance. `None` picks 1e-6 up to dimension 10 and 1e-5 above.
    pub tol: Option<f64>,
    pub seed: u64,
    pub max_dim: usize,
    /// Number of independent lattice shifts behind each error estimate.
    pub randomizations: usize,
    /// Budget of integrand evaluations per integral.
    pub max_evals: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self { tol: None, seed: 12345, max_dim: DEFAULT_MAX_DIM, randomizations: 12, max_evals: 4_000_000 }
    }
}

impl Numerics {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn tol_for(&self, dim: usize) -> f64 {
        self.tol.unwrap_or(if dim <= 10 { 1e-6 } else { 1e-5 })
    }

    /// Settings for both integrals of a ratio `M/P` so that the ratio itself meets
    /// the tolerance of dimension `dim`: each gets `tol·P/2`. The tightening is
    /// capped at [`MAX_RATIO_TIGHTENING`] and the evaluation budget grows by the
    /// same factor, since the lattice error falls roughly as one over the budget.
    pub fn for_ratio(&self, dim: usize, p: f64) -> Self {
        let base = self.tol_for(dim);
        let tol = (base * p.clamp(0.0, 1.0) / 2.0).max(base / MAX_RATIO_TIGHTENING).max(MIN_TOL);
        let factor = (base / tol).max(1.0);
        Self { tol: Some(tol), max_evals: (self.max_evals as f64 * factor).ceil() as usize, ..*self }
    }

    /// Copy with the seed replaced by a child seed for a labelled sub-computation.
    pub fn child(&self, labels: &[u64]) -> Self {
        Self { seed: crate::rng::derive(self.seed, labels), ..*self }
    }
}

/// A numerical value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
    /// False when some underlying integral stopped on its budget before reaching tolerance.
    pub converged: bool,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, abs_error: 0.0, converged: true }
    }

    pub fn new(value: f64, abs_error: f64) -> Self {
        Self { value, abs_error, converged: true }
    }

    /// Ratio with first-order error propagation.
    pub fn ratio(self, den: Estimate) -> Estimate {
        let value = self.value / den.value;
        let abs_error = (self.abs_error + value.abs() * den.abs_error) / den.value.abs();
        Estimate { value, abs_error, converged: self.converged && den.converged }
    }

    pub fn clamp_unit(self) -> Estimate {
        Estimate { value: self.value.clamp(0.0, 1.0), ..self }
    }

    pub fn with_error(self, extra: f64) -> Estimate {
        Estimate { abs_error: self.abs_error + extra, ..self }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate { value: self.value + o.value, abs_error: self.abs_error + o.abs_error, converged: self.converged && o.converged }
    }
}

impl std::ops::Sub for Estimate {
    type Output = Estimate;
    fn sub(self, o: Estimate) -> Estimate {
        Estimate { value: self.value - o.value, abs_error: self.abs_error + o.abs_error, converged: self.converged && o.converged }
    }
}

impl std::ops::Mul for Estimate {
    type Output = Estimate;
    fn mul(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value * o.value,
            abs_error: self.abs_error * o.value.abs() + o.abs_error * self.value.abs(),
            converged: self.converged && o.converged,
        }
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Estimate {
        iter.fold(Estimate::exact(0.0), |a, b| a + b)
    }
}

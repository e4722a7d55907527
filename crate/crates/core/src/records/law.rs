//! Output types of record computations and the truncation policy for series.

use crate::numerics::Estimate;
use serde::{Deserialize, Serialize};

/// Numerical provenance of a record law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawMeta {
    /// Dimensions of the Gaussian integrals evaluated.
    pub dims: Vec<usize>,
    pub seed: u64,
    pub tol: f64,
}

/// One evaluated point of a distribution function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub x: f64,
    pub value: Estimate,
}

/// Probability of a record event and its value distribution on evaluated points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordLaw {
    pub probability: Estimate,
    pub cdf: Vec<CdfPoint>,
    pub meta: LawMeta,
}

/// Truncation rule for the infinite series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPolicy {
    /// Terms below this count towards the stopping run.
    pub eps_tail: f64,
    /// Consecutive small terms needed to stop.
    pub run: usize,
    /// Largest number of terms.
    pub max_terms: usize,
    /// Largest accepted half-width of the closing tail bracket.
    pub max_residual: f64,
    /// Absolute tolerance of each term's Gaussian integral.
    pub term_tol: f64,
}

impl Default for TailPolicy {
    fn default() -> Self {
        Self { eps_tail: 1e-7, run: 5, max_terms: 500, max_residual: 0.05, term_tol: 1e-4 }
    }
}

impl TailPolicy {
    /// True when the last `run` terms are all below `eps_tail` and their geometric
    /// extrapolation stays below `10·eps_tail`. Returns the extrapolated tail.
    pub fn stop(&self, terms: &[f64]) -> Option<f64> {
        if terms.len() < self.run.max(2) {
            return None;
        }
        let last = &terms[terms.len() - self.run..];
        if last.iter().any(|t| t.abs() >= self.eps_tail) {
            return None;
        }
        let t = terms[terms.len() - 1].abs();
        let prev = terms[terms.len() - 2].abs();
        let tail = if t == 0.0 {
            0.0
        } else if prev > t {
            let r = t / prev;
            t * r / (1.0 - r)
        } else {
            f64::INFINITY
        };
        (tail < 10.0 * self.eps_tail).then_some(tail)
    }
}

/// Result of a truncated series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    /// Partial sum plus the tail estimate; `abs_error` includes the tail uncertainty.
    pub value: Estimate,
    pub terms: Vec<Estimate>,
    /// Index of the last term summed.
    pub truncation_index: usize,
    /// Upper bound on the mass not covered by the summed terms.
    pub residual_bound: f64,
    /// True when the stopping rule was not met and the tail was closed by its bracket.
    pub tail_bracketed: bool,
}

//! Exact and simulated record statistics for stationary Gaussian-copula sequences.
//!
//! Module map:
//! - [`linalg`]: correlation matrices, Cholesky, conditional Gaussian blocks.
//! - [`mvn`]: rectangle probabilities of the multivariate normal and sampling.
//! - [`csn`]: closed skew-normal laws.
//! - [`records`]: exact record laws for univariate stationary Gaussian sequences.
//! - [`asymptotic`]: extremal-index limits and GEV utilities.
//! - [`multivariate`]: complete records of d-dimensional sequences.
//! - [`simulate`]: Monte-Carlo oracle.

// `!(a < b)` is the NaN-rejecting form of the range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod csn;
pub mod error;
pub mod linalg;
pub mod multivariate;
pub mod mvn;
pub mod normal;
pub mod numerics;
pub mod quadrature;
pub mod records;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
pub use linalg::{ConditionalGaussian, CorrMatrix};

pub use csn::CsnParams;
pub use multivariate::CrossCorrelationModel;
pub use mvn::{MvnProblem, MvnResult};
pub use numerics::{Estimate, Numerics};
pub use records::{CorrelationModel, GammaConstruction, RecordLaw, TailPolicy};
pub use simulate::{EmpiricalRecordStats, SimStudy};

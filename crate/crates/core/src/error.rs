use thiserror::Error;

/// Errors raised by the numerical and record-law routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (leading minor {minor} fails)")]
    NotPositiveDefinite { minor: usize },
    #[error("matrix is not symmetric: |m[{i}][{j}] - m[{j}][{i}]| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },
    #[error("conditioning set must be a non-empty proper subset of 1..={dim}")]
    EmptyPartition { dim: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("integral of dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("normalizing probability {value:e} is below 1e-12")]
    DegenerateNormalization { value: f64 },
    #[error("rejection sampler acceptance rate {rate:e} is below {min:e}")]
    AcceptanceTooLow { rate: f64, min: f64 },
    #[error("matrix A does not have full row rank")]
    RankDeficient,
    #[error("degenerate correlation rho({i},{n}) = {rho} (must satisfy |rho| < 1)")]
    DegenerateCorrelation { i: usize, n: usize, rho: f64 },
    #[error(
        "invalid Gamma at n={n}: gamma({i},{j}) = {gamma}; admissibility requires \
         |1 + rho_ij - rho_in - rho_jn| <= 2 sqrt((1 - rho_in)(1 - rho_jn)) and Gamma PD"
    )]
    InvalidGamma { i: usize, j: usize, n: usize, gamma: f64 },
    #[error("invalid record times: {0}")]
    InvalidTimes(String),
    #[error("series tail did not converge: residual bound {residual:e} after {terms} terms")]
    TailNotConverged { terms: usize, residual: f64 },
    #[error("all moving-average coefficients are zero")]
    AllZeroCoefficients,
    #[error("delta matrix is not positive semi-definite (min eigenvalue {min_eig:e})")]
    InvalidDeltaMatrix { min_eig: f64 },
    #[error("delta for lag {lag} is required but missing")]
    MissingDelta { lag: usize },
    #[error("joint CDF over {d} components needs 2^{d} CSN terms; at most 4 components are supported")]
    SubsetExplosion { d: usize },
    #[error("insufficient exceedances: need {needed}, have {have}")]
    InsufficientExceedances { needed: usize, have: usize },
    #[error("model cannot be expanded: {0}")]
    Model(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Stationary autocorrelation models that expand to explicit correlation matrices.

use crate::error::{Error, Result};
use crate::linalg::CorrMatrix;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Default largest time index a parametric model expands to.
pub const DEFAULT_HORIZON: usize = 500;

/// Extension of a tabulated autocorrelation beyond its last lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailRule {
    /// `ρ_h = 0` for `h > H`.
    Zero,
    /// `ρ_h = ρ_H · ratio^{h−H}` for `h > H`.
    Geometric { ratio: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    Iid,
    Ar1 {
        phi: f64,
    },
    Equicorrelated {
        rho: f64,
    },
    /// `ρ_1..ρ_H`.
    Tabulated {
        rho: Vec<f64>,
        tail: TailRule,
    },
    /// Full matrix of `(X_1, …, X_N)`, not necessarily stationary.
    Explicit {
        rows: Vec<Vec<f64>>,
    },
    /// Triangular array whose matrix for a record at time `n` has
    /// `ρ_{i,n} = (n−2)/(n−1)` and `ρ_{i,j} = ρ_{i,n} + ρ_{j,n} − 1`, so that the
    /// standardized Γ of that record is the identity. Only record-at-n laws apply.
    UnitGammaArray,
}

/// Stationary autocorrelation with the horizon it may be expanded to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationModel {
    pub kind: ModelKind,
    pub horizon: usize,
}

impl CorrelationModel {
    pub fn iid() -> Self {
        Self { kind: ModelKind::Iid, horizon: DEFAULT_HORIZON }
    }

    pub fn ar1(phi: f64) -> Result<Self> {
        if !(phi.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!("AR(1) coefficient {phi} must lie in (-1, 1)")));
        }
        Ok(Self { kind: ModelKind::Ar1 { phi }, horizon: DEFAULT_HORIZON })
    }

    /// Equicorrelation is PD for every size only when `0 ≤ ρ < 1`; a negative `ρ`
    /// caps the horizon at the largest `N` with `1 + (N−1)ρ > 0`.
    pub fn equicorrelated(rho: f64) -> Result<Self> {
        if !(rho <= 1.0 && rho > -1.0) {
            return Err(Error::InvalidArgument(format!("equicorrelation {rho} must lie in (-1, 1]")));
        }
        let horizon = if rho < 0.0 {
            // PD iff 1 + (N−1)ρ > 0
            (1.0 + 1.0 / -rho).ceil() as usize - 1
        } else {
            DEFAULT_HORIZON
        };
        Ok(Self { kind: ModelKind::Equicorrelated { rho }, horizon: horizon.min(DEFAULT_HORIZON) })
    }

    pub fn tabulated(rho: Vec<f64>, tail: TailRule) -> Result<Self> {
        if rho.iter().any(|r| !(r.abs() <= 1.0)) {
            return Err(Error::InvalidArgument("tabulated autocorrelations must lie in [-1, 1]".into()));
        }
        if let TailRule::Geometric { ratio } = tail {
            if !(ratio.abs() < 1.0) {
                return Err(Error::InvalidArgument("geometric tail ratio must lie in (-1, 1)".into()));
            }
        }
        Ok(Self { kind: ModelKind::Tabulated { rho, tail }, horizon: DEFAULT_HORIZON })
    }

    pub fn explicit(m: CorrMatrix) -> Result<Self> {
        if !m.is_correlation() {
            return Err(Error::InvalidArgument("explicit model needs a correlation matrix".into()));
        }
        let horizon = m.dim();
        let rows = (0..horizon).map(|i| m.matrix().row(i).iter().copied().collect()).collect();
        Ok(Self { kind: ModelKind::Explicit { rows }, horizon })
    }

    pub fn unit_gamma_array() -> Self {
        Self { kind: ModelKind::UnitGammaArray, horizon: DEFAULT_HORIZON }
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        if !matches!(self.kind, ModelKind::Explicit { .. }) {
            self.horizon = horizon;
        }
        self
    }

    pub fn is_stationary(&self) -> bool {
        !matches!(self.kind, ModelKind::Explicit { .. } | ModelKind::UnitGammaArray)
    }

    /// `ρ_h` for stationary kinds.
    pub fn rho(&self, h: usize) -> Option<f64> {
        if h == 0 {
            return Some(1.0);
        }
        match &self.kind {
            ModelKind::Iid => Some(0.0),
            ModelKind::Ar1 { phi } => Some(phi.powi(h as i32)),
            ModelKind::Equicorrelated { rho } => Some(*rho),
            ModelKind::Tabulated { rho, tail } => Some(if h <= rho.len() {
                rho[h - 1]
            } else {
                match tail {
                    TailRule::Zero => 0.0,
                    TailRule::Geometric { ratio } => rho.last().copied().unwrap_or(0.0) * ratio.powi((h - rho.len()) as i32),
                }
            }),
            _ => None,
        }
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidArgument("expansion size must be at least 1".into()));
        }
        if n > self.horizon {
            return Err(Error::Model(format!("size {n} exceeds the model horizon {}", self.horizon)));
        }
        Ok(())
    }

    /// Correlation matrix of `(X_1, …, X_n)`. Positive definiteness is checked where it is used.
    pub fn matrix(&self, n: usize) -> Result<CorrMatrix> {
        self.check_n(n)?;
        match &self.kind {
            ModelKind::Explicit { rows } => CorrMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j])),
            ModelKind::UnitGammaArray => Err(Error::Model("the unit-Gamma array defines only record-at-n laws".into())),
            _ => CorrMatrix::new(DMatrix::from_fn(n, n, |i, j| self.rho(i.abs_diff(j)).expect("stationary"))),
        }
    }

    /// Matrix used for the law of a record at time `n`.
    pub fn record_matrix(&self, n: usize) -> Result<CorrMatrix> {
        if let ModelKind::UnitGammaArray = self.kind {
            self.check_n(n)?;
            if n == 1 {
                return Ok(CorrMatrix::identity(1));
            }
            let c = (n as f64 - 2.0) / (n as f64 - 1.0);
            return CorrMatrix::new(DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    1.0
                } else if i == n - 1 || j == n - 1 {
                    c
                } else {
                    2.0 * c - 1.0
                }
            }));
        }
        self.matrix(n)
    }

    /// Short label used in output headers.
    pub fn label(&self) -> String {
        match &self.kind {
            ModelKind::Iid => "iid".into(),
            ModelKind::Ar1 { phi } => format!("ar1({phi})"),
            ModelKind::Equicorrelated { rho } => format!("equicorrelated({rho})"),
            ModelKind::Tabulated { rho, .. } => format!("tabulated({} lags)", rho.len()),
            ModelKind::Explicit { rows } => format!("explicit({}x{})", rows.len(), rows.len()),
            ModelKind::UnitGammaArray => "unit-gamma-array".into(),
        }
    }
}

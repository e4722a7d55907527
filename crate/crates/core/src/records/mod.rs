//! Exact record laws for stationary standard Gaussian sequences.

pub mod gamma;
pub mod gaussian;
pub mod law;
pub mod model;

pub use gamma::{Constraint, GammaConstruction};
pub use gaussian::*;
pub use law::{CdfPoint, LawMeta, RecordLaw, SeriesResult, TailPolicy};
pub use model::{CorrelationModel, ModelKind, TailRule};

//! Exact truncated series: cyclotomic coefficients, multivariate Puiseux series,
//! square matrices over them, and matrix series in z.

pub mod cyclotomic;
pub mod matrix;
pub mod multiseries;
pub mod zmatrix;

use thiserror::Error;

pub use cyclotomic::{Cyclo, Rational};
pub use matrix::Matrix;
pub use multiseries::{MultiSeries, Ring, Variable};
pub use zmatrix::{Direction, ZMatrixSeries};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("series belong to different rings")]
    RingMismatch,
    #[error("invalid ring: {0}")]
    InvalidRing(String),
    #[error("exp requires positive valuation")]
    NonPositiveValuation,
    #[error("log requires constant term 1")]
    BadConstantTerm,
    #[error("series is not invertible (leading part is not a unit monomial)")]
    NotInvertible,
    #[error("coefficient ring too small for root of {0}")]
    ExtensionTooSmall(String),
    #[error("term {0} lies in the kernel of the derivation")]
    NotIntegrable(String),
    #[error("substitution lowered the guaranteed order to {0}")]
    ValuationLoss(String),
    #[error("matrix dimension mismatch")]
    DimensionMismatch,
    #[error("parse error: {0}")]
    Parse(String),
}

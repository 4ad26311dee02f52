//! Frobenius manifolds: input data, quantum product, Euler field and canonical frame.

mod algebra;
mod frame;
mod oracle;
mod spec;

use thiserror::Error;

use crate::series::SeriesError;

pub use algebra::{QuantumAlgebra, Vector};
pub use frame::{
    canonical_frame, conjugated_grading, frame_checks, psi_inverse, semisimplicity_certificate, CanonicalFrame,
    SemisimplicityCertificate,
};
pub use oracle::{gw0_oracle, kontsevich_numbers, Target};
pub use spec::{BasePointEntry, FrobeniusSpec, PotentialTerm, SpecDocument};

#[derive(Debug, Error)]
pub enum FrobeniusError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("insufficient order for the requested truncation")]
    InsufficientOrder,
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("not semisimple at the base point")]
    NotSemisimple,
    #[error("Newton iteration stalled; raise the precision budget")]
    ConvergenceStall,
    #[error("unsupported target '{0}'")]
    UnsupportedTarget(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

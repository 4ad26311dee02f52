//! Ancestor and descendant potentials: Givental's formula, fundamental solutions, the
//! ancestor–descendant change of variables, genus-zero reconstruction and the divisor specialization.

mod ancestor;
mod descendant;
mod fundamental;
mod genus_zero;
mod gradient;
mod rationality;
mod specialize;

use thiserror::Error;

use crate::fock::FockError;
use crate::frobenius::FrobeniusError;
use crate::rmatrix::RMatrixError;
use crate::series::SeriesError;

pub use ancestor::{abstract_ancestor, AncestorPotential, GenusOneNormalization, Model};
pub use descendant::{
    ancestor_to_descendant, descendant_residuals, recover_genus_one, DescendantPotential, GenusOnePolicy, GenusOnePrimary,
    ResidualReport,
};
pub use fundamental::{flatness_residuals, fundamental_solution, FundamentalSolution};
pub use genus_zero::{descendant_keys, genus0_ancestors, genus0_descendants};
pub use gradient::{integrate_gradient, Derivative};
pub use rationality::{rationality_residuals, RationalityReport};
pub use specialize::{presentation_residuals, specialize_novikov, SpecializedPotential};

#[derive(Debug, Error)]
pub enum PotentialsError {
    #[error("output shift differs from the unit vector")]
    ShiftMismatch,
    #[error("insufficient order: {0}")]
    InsufficientOrder(String),
    #[error("bounds exceeded: {0}")]
    BoundsExceeded(String),
    #[error("gradient is not integrable: {0}")]
    NonIntegrable(String),
    #[error("invalid shift: {0}")]
    InvalidShift(String),
    #[error("truncation too coarse: {0}")]
    TruncationTooCoarse(String),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Frobenius(#[from] FrobeniusError),
    #[error(transparent)]
    RMatrix(#[from] RMatrixError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

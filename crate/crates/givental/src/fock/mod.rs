//! Fock space elements, the Witten–Kontsevich vertex data, propagators and quantized
//! unitary operators as Feynman sums over decorated stable graphs.

pub mod checks;
pub mod graphs;
pub mod operator;
pub mod random;
pub mod store;
pub mod tau;

use thiserror::Error;

use crate::series::SeriesError;

pub use checks::{dilaton_residuals, string_residuals};
pub use graphs::{decorated_automorphisms, enumerate_graphs, enumerate_stable_shapes, StableGraph};
pub use operator::{
    feynman_sum, propagator, quantize, recenter, required_input_bounds, symplectic_form, transform_slots, vertex_bounds,
    LaurentVector, Propagator, UnitaryOp,
};
pub use random::random_unitary;
pub use store::{tame_keys, Bounds, CorrelatorStore, Discriminant, FockElement, Key, Rationality, Slot};
pub use tau::{tau_point, tau_product, KdvEvaluator, WittenKontsevich};

#[derive(Debug, Error)]
pub enum FockError {
    #[error("entry {0} lies outside the store bounds")]
    BoundsExceeded(String),
    #[error("operator is not unitary: {0}")]
    NotUnitary(String),
    #[error("z-window too small: {0}")]
    WindowTooSmall(String),
    #[error("quantized store violates tameness")]
    NotTame,
    #[error("output shift is not the expected vector")]
    ShiftMismatch,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("cannot parse store record: {0}")]
    Parse(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

//! Numerical diagnostics: the Hilbert norms on Laurent series, the product estimate, and
//! empirical fits of the coefficient growth that NF-convergence bounds.
//!
//! Floats never flow back into the exact pipeline.

mod fit;
mod norms;

use thiserror::Error;

pub use fit::{factorial_store, m_coefficient_bound_fit, nf_radius_estimate, CoefficientFit, RadiusFit};
pub use norms::{norm_n, product_estimate_test, reciprocal_gamma_half, LaurentSample, ProductReport, ProductTestConfig};

#[derive(Debug, Error)]
pub enum ConvergenceError {
    #[error("product estimate violated: {0}")]
    CounterexampleFound(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

//! The abstract ancestor potential e^{−(1/48)Σ log Δⁱ} Ψ̂ R̂ ∏ τ.

use std::sync::Arc;

use num_bigint::BigInt;

use super::PotentialsError;
use crate::fock::operator::top_order;
use crate::fock::{quantize, required_input_bounds, tau_product, Bounds, FockElement, UnitaryOp};
use crate::frobenius::{canonical_frame, CanonicalFrame, FrobeniusSpec, QuantumAlgebra};
use crate::rmatrix::{solve_r, RMatrix};
use crate::series::{Matrix, MultiSeries, Rational, Ring};

/// Everything the pipeline derives from a spec at one precision.
#[derive(Clone, Debug)]
pub struct Model {
    pub spec: FrobeniusSpec,
    pub ring: Arc<Ring>,
    pub algebra: QuantumAlgebra,
    pub frame: CanonicalFrame,
    pub r: RMatrix,
}

impl Model {
    pub fn new(spec: &FrobeniusSpec, precision: &Rational, z_order: usize) -> Result<Self, PotentialsError> {
        let ring = spec.ring(precision)?;
        let algebra = QuantumAlgebra::new(spec, &ring)?;
        let frame = canonical_frame(&algebra)?;
        let r = solve_r(&frame, &algebra, z_order)?;
        Ok(Model { spec: spec.clone(), ring, algebra, frame, r })
    }

    pub fn rank(&self) -> usize {
        self.algebra.rank()
    }
}

/// The genus-one constant: the prefactor −(1/48)Σ log Δⁱ against the constant −(1/24)Σ log δᵢ
/// produced by expanding each τ factor at δᵢ = (Δⁱ)^{−1/2}.
#[derive(Clone, Debug)]
pub struct GenusOneNormalization {
    pub prefactor: Rational,
    pub expansion: Rational,
    pub normalizations: Vec<MultiSeries>,
}

impl GenusOneNormalization {
    /// Coefficient of Σ log Δⁱ left in F¹ at y = 0.
    pub fn residual(&self) -> Rational {
        &self.prefactor - &self.expansion / Rational::from_integer(BigInt::from(2))
    }
}

#[derive(Clone, Debug)]
pub struct AncestorPotential {
    pub element: FockElement,
    pub normalization: GenusOneNormalization,
}

/// Ψ̂R̂ applied to ∏ τ with ΨR quantized as one unitary operator.
pub fn abstract_ancestor(
    algebra: &QuantumAlgebra,
    frame: &CanonicalFrame,
    r: &RMatrix,
    bounds: &Bounds,
) -> Result<AncestorPotential, PotentialsError> {
    let ring = algebra.ring.clone();
    let n = algebra.rank();
    let top = top_order(bounds);
    if r.order() < top {
        return Err(PotentialsError::InsufficientOrder(format!("R known through z^{}, need z^{top}", r.order())));
    }
    let shift: Vec<MultiSeries> = frame.sqrt_normalizations.iter().map(|s| s.try_inv()).collect::<Result<_, _>>()?;
    let tau = tau_product(&ring, &shift, &frame.sqrt_normalizations, required_input_bounds(bounds));
    let coeffs: Vec<Matrix> = r.coeffs.iter().take(top + 1).map(|rk| frame.psi.mul(rk)).collect();
    let op = UnitaryOp::truncated(Matrix::identity(&ring, n), algebra.pairing.clone(), coeffs);
    let element = quantize(&op, &tau, bounds)?;
    let unit = algebra.basis_vector(0);
    if !element.shift.iter().zip(&unit).all(|(a, b)| a.agrees_with(b)) {
        return Err(PotentialsError::ShiftMismatch);
    }
    let normalization = GenusOneNormalization {
        prefactor: Rational::new(BigInt::from(-1), BigInt::from(48)),
        expansion: Rational::new(BigInt::from(-1), BigInt::from(24)),
        normalizations: frame.normalizations.clone(),
    };
    Ok(AncestorPotential { element, normalization })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::tau_point;
    use num_traits::Zero;

    fn model(name: &str, precision: i64, order: usize) -> Model {
        let spec = FrobeniusSpec::shipped(name).unwrap();
        Model::new(&spec, &Rational::from_integer(BigInt::from(precision)), order).unwrap()
    }

    #[test]
    fn point_ancestor_is_the_tau_store() {
        let m = model("point", 4, 10);
        let bounds = Bounds::tame(3, 4);
        let anc = abstract_ancestor(&m.algebra, &m.frame, &m.r, &bounds).unwrap();
        let tau = tau_point(3, 4);
        assert_eq!(anc.element.store.len(), tau.len());
        for (k, v) in tau.entries() {
            let got = anc.element.store.get(k).unwrap();
            assert_eq!(got.constant_term().as_rational().unwrap(), v.constant_term().as_rational().unwrap(), "{k}");
        }
        assert!(anc.normalization.residual().is_zero());
    }

    #[test]
    fn short_r_matrix_is_reported() {
        let m = model("p1", 6, 1);
        let err = abstract_ancestor(&m.algebra, &m.frame, &m.r, &Bounds::tame(1, 3)).unwrap_err();
        assert!(matches!(err, PotentialsError::InsufficientOrder(_)));
    }
}

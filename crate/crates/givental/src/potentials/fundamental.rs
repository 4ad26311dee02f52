//! The fundamental solution L(t, z) = Σ_k L_k z^{−k} of the Dubrovin connection on the small locus,
//! and its inverse M(t, z), the adjoint of L(t, −z).

use num_bigint::BigInt;

use super::gradient::{integrate_gradient, Derivative};
use super::PotentialsError;
use crate::frobenius::{FrobeniusSpec, QuantumAlgebra};
use crate::series::{Cyclo, Matrix, MultiSeries, Rational};

#[derive(Clone, Debug)]
pub struct FundamentalSolution {
    /// L_k, the coefficient of z^{−k}; L_0 = Id.
    pub coeffs: Vec<Matrix>,
    /// M_k = (−1)^k g⁻¹ L_kᵀ g.
    pub inverse: Vec<Matrix>,
}

impl FundamentalSolution {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficients of L(t, −z)ᵀ g L(t, z) − g.
    pub fn pairing_residuals(&self, pairing: &Matrix) -> Vec<Matrix> {
        let k_max = self.order();
        (0..=k_max)
            .map(|k| {
                let mut acc = Matrix::zero(pairing.ring(), pairing.dim());
                for a in 0..=k {
                    let term = self.coeffs[a].transpose().mul(pairing).mul(&self.coeffs[k - a]);
                    acc = if a % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
                }
                if k == 0 {
                    acc = acc.sub(pairing);
                }
                acc
            })
            .collect()
    }

    /// Coefficients of M(t, z)L(t, z) − Id.
    pub fn inverse_residuals(&self) -> Vec<Matrix> {
        let ring = self.coeffs[0].ring().clone();
        let n = self.coeffs[0].dim();
        (0..=self.order())
            .map(|k| {
                let mut acc = Matrix::zero(&ring, n);
                for a in 0..=k {
                    acc = acc.add(&self.inverse[a].mul(&self.coeffs[k - a]));
                }
                if k == 0 {
                    acc = acc.sub(&Matrix::identity(&ring, n));
                }
                acc
            })
            .collect()
    }
}

/// The flatness equations for L_{k+1} given L_k: Q_i∂_{Q_i}L_{k+1} = φ_i∗L_k − L_k(φ_i∪) along
/// divisor directions, ∂_p L_{k+1} = s·φ_c∗L_k along a base-point parameter t^c = s·p.
fn flatness_targets(spec: &FrobeniusSpec, algebra: &QuantumAlgebra, previous: &Matrix) -> Vec<(bool, usize, Matrix)> {
    let r = spec.divisor_count;
    let mut out = Vec::new();
    for i in 0..r {
        let product = &algebra.products[i + 1];
        let classical = product.map(|x| MultiSeries::constant(x.ring(), x.constant_term()));
        out.push((true, i, product.mul(previous).sub(&previous.mul(&classical))));
    }
    for (j, b) in spec.base_point.iter().enumerate() {
        out.push((false, r + j, algebra.products[b.coordinate].mul(previous).scale_rational(&b.scale)));
    }
    out
}

/// Solves ∂L = z⁻¹(φ∗)L order by order in z⁻¹ with L_0 = Id and L(t=0, Q=0) = Id.
pub fn fundamental_solution(
    spec: &FrobeniusSpec,
    algebra: &QuantumAlgebra,
    order_z: usize,
) -> Result<FundamentalSolution, PotentialsError> {
    let ring = algebra.ring.clone();
    let n = algebra.rank();
    let mut coeffs = vec![Matrix::identity(&ring, n)];
    for k in 0..order_z {
        let targets = flatness_targets(spec, algebra, &coeffs[k]);
        let next = if targets.is_empty() {
            Matrix::zero(&ring, n)
        } else {
            let mut m = Matrix::zero(&ring, n);
            for a in 0..n {
                for b in 0..n {
                    let ds: Vec<Derivative> = targets
                        .iter()
                        .map(|(log, v, t)| {
                            if *log {
                                Derivative::Logarithmic(*v, t.get(a, b).clone())
                            } else {
                                Derivative::Plain(*v, t.get(a, b).clone())
                            }
                        })
                        .collect();
                    m.set(a, b, integrate_gradient(&ds, &Cyclo::zero(ring.cyclotomic_order))?);
                }
            }
            m
        };
        coeffs.push(next);
    }
    let g = &algebra.pairing;
    let g_inv = &algebra.pairing_inverse;
    let inverse = coeffs
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let m = g_inv.mul(&l.transpose()).mul(g);
            if k % 2 == 0 {
                m
            } else {
                m.scale_rational(&Rational::from_integer(BigInt::from(-1)))
            }
        })
        .collect();
    Ok(FundamentalSolution { coeffs, inverse })
}

/// Residuals of the flatness equations on the computed coefficients.
pub fn flatness_residuals(spec: &FrobeniusSpec, algebra: &QuantumAlgebra, l: &FundamentalSolution) -> Vec<Matrix> {
    let mut out = Vec::new();
    for k in 0..l.order() {
        for (log, v, t) in flatness_targets(spec, algebra, &l.coeffs[k]) {
            let lhs = l.coeffs[k + 1].map(|x| if log { x.log_derivative_in(v) } else { x.partial(v) });
            out.push(lhs.sub(&t));
        }
    }
    out
}

//! Quantum product, Euler multiplication and grading at the base point.

use std::sync::Arc;

use super::{FrobeniusError, FrobeniusSpec};
use crate::series::{Matrix, MultiSeries, Rational, Ring};

/// Structure of the quantum cohomology algebra at the base point.
#[derive(Clone, Debug)]
pub struct QuantumAlgebra {
    pub ring: Arc<Ring>,
    pub pairing: Matrix,
    pub pairing_inverse: Matrix,
    /// `products[a]` is the matrix of φ_a∗ (column b holds φ_a∗φ_b).
    pub products: Vec<Matrix>,
    /// Matrix of E∗ at the base point.
    pub euler: Matrix,
    /// Diagonal of the grading operator μ.
    pub grading: Vec<Rational>,
    pub divisor_count: usize,
}

pub type Vector = Vec<MultiSeries>;

impl QuantumAlgebra {
    pub fn new(spec: &FrobeniusSpec, ring: &Arc<Ring>) -> Result<Self, FrobeniusError> {
        let n = spec.rank();
        let pairing = spec.pairing_matrix(ring);
        let pairing_inverse = pairing.try_inverse()?;
        let mut cubic = vec![vec![vec![MultiSeries::zero(ring); n]; n]; n];
        for a in 0..n {
            for b in a..n {
                for c in b..n {
                    let v = spec.potential_derivative(ring, &[a, b, c]);
                    for (x, y, z) in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                        cubic[x][y][z] = v.clone();
                    }
                }
            }
        }
        let products: Vec<Matrix> = (0..n)
            .map(|a| {
                Matrix::from_fn(n, |c, b| {
                    let mut acc = MultiSeries::zero(ring);
                    for d in 0..n {
                        let gi = pairing_inverse.get(d, c);
                        if !gi.is_zero() {
                            acc = acc.add(&cubic[a][b][d].mul(gi));
                        }
                    }
                    acc
                })
            })
            .collect();
        let mut euler = Matrix::zero(ring, n);
        for i in 0..spec.divisor_count {
            euler = euler.add(&products[i + 1].scale_rational(&spec.rho[i]));
        }
        for b in &spec.base_point {
            let t = spec.base_coordinate(ring, b.coordinate).scale_rational(&spec.coordinate_weight(b.coordinate));
            euler = euler.add(&products[b.coordinate].scale(&t));
        }
        Ok(QuantumAlgebra {
            ring: ring.clone(),
            pairing,
            pairing_inverse,
            products,
            euler,
            grading: spec.grading(),
            divisor_count: spec.divisor_count,
        })
    }

    pub fn rank(&self) -> usize {
        self.products.len()
    }

    pub fn basis_vector(&self, a: usize) -> Vector {
        (0..self.rank()).map(|i| if i == a { MultiSeries::one(&self.ring) } else { MultiSeries::zero(&self.ring) }).collect()
    }

    pub fn multiply(&self, x: &[MultiSeries], y: &[MultiSeries]) -> Vector {
        let n = self.rank();
        let mut acc = vec![MultiSeries::zero(&self.ring); n];
        for (a, xa) in x.iter().enumerate() {
            if xa.is_exactly_zero() {
                continue;
            }
            let img = self.products[a].apply(y);
            for i in 0..n {
                acc[i] = acc[i].add(&img[i].mul(xa));
            }
        }
        acc
    }

    pub fn pair(&self, x: &[MultiSeries], y: &[MultiSeries]) -> MultiSeries {
        let gy = self.pairing.apply(y);
        let mut acc = MultiSeries::zero(&self.ring);
        for (a, b) in x.iter().zip(&gy) {
            if !a.is_exactly_zero() && !b.is_exactly_zero() {
                acc = acc.add(&a.mul(b));
            }
        }
        acc
    }

    pub fn grading_matrix(&self) -> Matrix {
        let n = self.rank();
        Matrix::from_fn(n, |i, j| {
            if i == j {
                MultiSeries::from_rational(&self.ring, self.grading[i].clone())
            } else {
                MultiSeries::zero(&self.ring)
            }
        })
    }

    /// (φ_a∗φ_b)∗φ_c = φ_a∗(φ_b∗φ_c) for all triples.
    pub fn is_associative(&self) -> bool {
        let n = self.rank();
        for a in 0..n {
            for b in 0..n {
                let ab = self.multiply(&self.basis_vector(a), &self.basis_vector(b));
                for c in 0..n {
                    let left = self.multiply(&ab, &self.basis_vector(c));
                    let bc = self.multiply(&self.basis_vector(b), &self.basis_vector(c));
                    let right = self.multiply(&self.basis_vector(a), &bc);
                    if left.iter().zip(&right).any(|(x, y)| !x.agrees_with(y)) {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn is_commutative(&self) -> bool {
        let n = self.rank();
        (0..n).all(|a| (0..n).all(|b| self.products[a].column(b).iter().zip(self.products[b].column(a)).all(|(x, y)| x.agrees_with(&y))))
    }

    /// g(φ_a∗φ_b, φ_c) is totally symmetric.
    pub fn is_frobenius(&self) -> bool {
        let n = self.rank();
        for a in 0..n {
            for b in 0..n {
                let ab = self.products[a].column(b);
                for c in 0..n {
                    let bc = self.products[b].column(c);
                    let x = self.pair(&ab, &self.basis_vector(c));
                    let y = self.pair(&self.basis_vector(a), &bc);
                    if !x.agrees_with(&y) {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn unit_acts_trivially(&self) -> bool {
        self.products[0].agrees_with(&Matrix::identity(&self.ring, self.rank()))
    }
}

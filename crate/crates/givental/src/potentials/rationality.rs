//! Rational-jet check of an ancestor potential: weight, discriminant det(−q₁∗) and the closed
//! forms of the genus-zero and genus-one jets along y = y₁z.

use num_bigint::BigInt;

use super::ancestor::AncestorPotential;
use crate::fock::Key;
use crate::frobenius::QuantumAlgebra;
use crate::series::{Matrix, MultiSeries, Rational};

#[derive(Clone, Debug)]
pub struct RationalityReport {
    pub weight: Option<Rational>,
    /// P(q₁) = det(−q₁∗) on the grid {0,…,N+1}^{N+1}, which pins a polynomial of degree ≤ N+1.
    pub discriminant_matches: bool,
    /// P(−φ₀) = 1.
    pub normalized: bool,
    pub jets_checked: usize,
    pub jet_failures: Vec<Key>,
}

impl RationalityReport {
    pub fn passed(&self) -> bool {
        self.weight == Some(Rational::new(BigInt::from(-1), BigInt::from(24)))
            && self.discriminant_matches
            && self.normalized
            && self.jet_failures.is_empty()
    }
}

fn factorial(n: usize) -> Rational {
    Rational::from_integer((1..=n as u64).product::<u64>().into())
}

fn product_of(algebra: &QuantumAlgebra, indices: &[usize]) -> Matrix {
    let n = algebra.rank();
    indices.iter().fold(Matrix::identity(&algebra.ring, n), |acc, &a| acc.mul(&algebra.products[a]))
}

/// Grid points of {0,…,k}^dim.
fn grid(dim: usize, k: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out.into_iter().flat_map(|p| (0..=k).map(move |x| [p.clone(), vec![x]].concat())).collect();
    }
    out
}

/// Compares the ancestor store with −(1/24) log det(−q₁∗) in genus one and with
/// m!·(a∗b∗c∗d₁∗⋯∗d_m, φ₀) in genus zero, at y₀ = 0 except for the three genus-zero primaries.
pub fn rationality_residuals(potential: &AncestorPotential, algebra: &QuantumAlgebra) -> RationalityReport {
    let element = &potential.element;
    let ring = &algebra.ring;
    let dim = algebra.rank();
    let weight = element.rationality.as_ref().map(|r| r.weight.clone());
    let discriminant_matches = element.rationality.as_ref().is_some_and(|r| {
        grid(dim, dim as i64).into_iter().all(|point| {
            let q1: Vec<MultiSeries> = point.iter().map(|&x| MultiSeries::from_int(ring, x)).collect();
            let star = (0..dim).fold(Matrix::zero(ring, dim), |acc, a| acc.sub(&algebra.products[a].scale(&q1[a])));
            r.discriminant.evaluate(&q1).agrees_with(&star.determinant())
        })
    });
    let mut jets_checked = 0;
    let mut jet_failures = Vec::new();
    let unit = algebra.basis_vector(0);
    for (key, value) in element.store.entries() {
        let ones: Vec<usize> = key.slots.iter().filter(|s| s.psi == 1).map(|s| s.index).collect();
        let zeros: Vec<usize> = key.slots.iter().filter(|s| s.psi == 0).map(|s| s.index).collect();
        if ones.len() + zeros.len() != key.len() {
            continue;
        }
        let expected = match (key.genus, zeros.len()) {
            (1, 0) => product_of(algebra, &ones).trace().scale_rational(&(factorial(ones.len() - 1) / Rational::from_integer(24.into()))),
            (0, 3) => {
                let all: Vec<usize> = zeros.iter().chain(&ones).copied().collect();
                let v = product_of(algebra, &all).column(0);
                let gv = algebra.pairing.apply(&v);
                gv.iter().zip(&unit).fold(MultiSeries::zero(ring), |a, (x, y)| a.add(&x.mul(y))).scale_rational(&factorial(ones.len()))
            }
            _ => continue,
        };
        jets_checked += 1;
        if !value.agrees_with(&expected) {
            jet_failures.push(key.clone());
        }
    }
    RationalityReport { weight, discriminant_matches, normalized: element.rationality_normalized(), jets_checked, jet_failures }
}

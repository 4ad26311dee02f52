//! Seeded random unitary operators A₀·exp(X(z)) for composition checks.

use std::sync::Arc;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::operator::UnitaryOp;
use crate::series::{Matrix, MultiSeries, Rational, Ring};

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn constant(ring: &Arc<Ring>, r: Rational) -> MultiSeries {
    MultiSeries::from_rational(ring, r)
}

pub(crate) fn random_matrix(ring: &Arc<Ring>, dim: usize, rng: &mut ChaCha8Rng, symmetric: Option<bool>) -> Matrix {
    let mut m = Matrix::zero(ring, dim);
    for i in 0..dim {
        for j in 0..dim {
            let v = match symmetric {
                Some(true) if j < i => m.get(j, i).clone(),
                Some(false) if j < i => m.get(j, i).neg(),
                Some(false) if j == i => MultiSeries::zero(ring),
                _ => constant(ring, q(rng.gen_range(-3..4), rng.gen_range(1..3))),
            };
            m.set(i, j, v);
        }
    }
    m
}

fn series_mul(a: &[Matrix], b: &[Matrix], order: usize) -> Vec<Matrix> {
    (0..=order)
        .map(|k| {
            let mut acc = Matrix::zero(a[0].ring(), a[0].dim());
            for j in 0..=k {
                acc = acc.add(&a[j].mul(&b[k - j]));
            }
            acc
        })
        .collect()
}

/// A₀ exp(X(z)) truncated at z^order, with A₀ a Cayley transform and X_k symmetric for odd k,
/// antisymmetric for even k.
pub fn random_unitary(ring: &Arc<Ring>, dim: usize, order: usize, seed: u64) -> UnitaryOp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = Matrix::identity(ring, dim);
    let s = random_matrix(ring, dim, &mut rng, Some(false));
    let a0 = id.sub(&s).mul(&id.add(&s).try_inverse().unwrap());
    let mut x = vec![Matrix::zero(ring, dim)];
    for k in 1..=order {
        x.push(random_matrix(ring, dim, &mut rng, Some(k % 2 == 1)));
    }
    let mut exp = vec![Matrix::zero(ring, dim); order + 1];
    exp[0] = id.clone();
    let mut power = exp.clone();
    for m in 1..=order {
        power = series_mul(&power, &x, order);
        let scale = Rational::new(BigInt::from(1), (1..=m as i64).map(BigInt::from).product());
        for k in 0..=order {
            exp[k] = exp[k].add(&power[k].scale_rational(&scale));
        }
    }
    let coeffs = exp.iter().map(|m| a0.mul(m)).collect();
    UnitaryOp::truncated(id.clone(), id, coeffs)
}

//! Genus-zero potentials from the WDVV associativity recursion.

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{One, Zero};

use super::{FrobeniusError, PotentialTerm};
use crate::series::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    P1,
    P2,
}

impl std::str::FromStr for Target {
    type Err = FrobeniusError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(Target::P1),
            "p2" => Ok(Target::P2),
            other => Err(FrobeniusError::UnsupportedTarget(other.to_string())),
        }
    }
}

/// N_1..N_max: rational plane curves of degree d through 3d − 1 points, from the WDVV recursion
/// N_d = Σ N_a N_b (a²b² C(3d−4, 3a−2) − a³b C(3d−4, 3a−1)).
pub fn kontsevich_numbers(max_degree: u32) -> Vec<BigInt> {
    let mut n: Vec<BigInt> = vec![BigInt::zero(), BigInt::one()];
    for d in 2..=max_degree as i64 {
        let mut acc = BigInt::zero();
        for a in 1..d {
            let b = d - a;
            let (ba, bb) = (BigInt::from(a), BigInt::from(b));
            let first = &ba * &ba * &bb * &bb * binomial(BigInt::from(3 * d - 4), BigInt::from(3 * a - 2));
            let second = &ba * &ba * &ba * &bb * binomial(BigInt::from(3 * d - 4), BigInt::from(3 * a - 1));
            acc += &n[a as usize] * &n[b as usize] * (first - second);
        }
        n.push(acc);
    }
    n.truncate(max_degree as usize + 1);
    n.remove(0);
    n
}

fn factorial(k: u32) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

fn half() -> Rational {
    Rational::new(BigInt::one(), BigInt::from(2))
}

/// Genus-zero potential terms of the target through Novikov degree `max_degree`.
pub fn gw0_oracle(target: Target, max_degree: u32) -> Vec<PotentialTerm> {
    match target {
        Target::P1 => {
            // string and divisor axioms leave only the degree-one term with no insertions
            let mut terms = vec![PotentialTerm { t: vec![2, 1], novikov: vec![0], coefficient: half() }];
            if max_degree >= 1 {
                terms.push(PotentialTerm { t: vec![0, 0], novikov: vec![1], coefficient: Rational::one() });
            }
            terms
        }
        Target::P2 => {
            let mut terms = vec![
                PotentialTerm { t: vec![2, 0, 1], novikov: vec![0], coefficient: half() },
                PotentialTerm { t: vec![1, 2, 0], novikov: vec![0], coefficient: half() },
            ];
            for (i, nd) in kontsevich_numbers(max_degree).into_iter().enumerate() {
                let d = i as u32 + 1;
                terms.push(PotentialTerm {
                    t: vec![0, 0, 3 * d - 1],
                    novikov: vec![d],
                    coefficient: Rational::new(nd, factorial(3 * d - 1)),
                });
            }
            terms
        }
    }
}

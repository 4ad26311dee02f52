//! Recovering a series from its derivatives along the ring variables.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;

use super::PotentialsError;
use crate::series::{Cyclo, MultiSeries, Rational};

/// One prescribed derivative of the unknown series X.
#[derive(Clone, Debug)]
pub enum Derivative {
    /// x_v ∂X/∂x_v
    Logarithmic(usize, MultiSeries),
    /// ∂X/∂x_v
    Plain(usize, MultiSeries),
}

impl Derivative {
    fn variable(&self) -> usize {
        match self {
            Derivative::Logarithmic(v, _) | Derivative::Plain(v, _) => *v,
        }
    }

    fn target(&self) -> &MultiSeries {
        match self {
            Derivative::Logarithmic(_, t) | Derivative::Plain(_, t) => t,
        }
    }
}

/// The series X with X(0) = `constant` and the given derivatives, checked for integrability.
pub fn integrate_gradient(derivatives: &[Derivative], constant: &Cyclo) -> Result<MultiSeries, PotentialsError> {
    let ring = derivatives.first().expect("at least one derivative").target().ring().clone();
    let m = ring.puiseux_denominator as i64;
    let nvars = ring.nvars();
    let mut exponents: Vec<Vec<i64>> = Vec::new();
    let mut order: Option<Rational> = None;
    for d in derivatives {
        let v = d.variable();
        let (shift, extra) = match d {
            Derivative::Logarithmic(..) => (0, Rational::zero()),
            Derivative::Plain(..) => (m, ring.variables[v].weight.clone()),
        };
        for e in d.target().terms().keys() {
            let mut f = e.clone();
            f[v] += shift;
            exponents.push(f);
        }
        if let Some(o) = d.target().truncation_order() {
            let o = o + extra;
            order = Some(match order {
                Some(x) if x < o => x,
                _ => o,
            });
        }
    }
    exponents.sort();
    exponents.dedup();
    let mut terms = BTreeMap::new();
    let zero = vec![0i64; nvars];
    terms.insert(zero.clone(), constant.clone());
    for e in exponents {
        if e == zero {
            continue;
        }
        let d = derivatives
            .iter()
            .find(|d| e[d.variable()] != 0)
            .ok_or_else(|| PotentialsError::NonIntegrable(format!("no derivative along the variables of {e:?}")))?;
        let v = d.variable();
        let source = match d {
            Derivative::Logarithmic(..) => e.clone(),
            Derivative::Plain(..) => {
                let mut f = e.clone();
                f[v] -= m;
                f
            }
        };
        let c = d.target().coefficient(&source);
        terms.insert(e.clone(), c.scale(&Rational::new(BigInt::from(m), BigInt::from(e[v]))));
    }
    let x = MultiSeries::from_terms(&ring, terms, order);
    for d in derivatives {
        let got = match d {
            Derivative::Logarithmic(v, _) => x.log_derivative_in(*v),
            Derivative::Plain(v, _) => x.partial(*v),
        };
        if !got.agrees_with(d.target()) {
            return Err(PotentialsError::NonIntegrable(format!("mixed partials disagree along variable {}", d.variable())));
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{Ring, Variable};
    use num_traits::One;

    fn ring() -> std::sync::Arc<Ring> {
        let v = |n: &str| Variable { name: n.into(), weight: Rational::one(), euler_weight: Rational::one() };
        Ring::new(1, 1, vec![v("Q"), v("s")], Rational::from_integer(BigInt::from(8))).unwrap()
    }

    #[test]
    fn recovers_a_polynomial() {
        let ring = ring();
        let q = MultiSeries::variable(&ring, 0);
        let s = MultiSeries::variable(&ring, 1);
        let x = q.mul(&s.pow(2)).add(&q.pow(3)).add(&s.scale_rational(&Rational::new(BigInt::from(1), BigInt::from(5))));
        let ds = vec![Derivative::Logarithmic(0, x.log_derivative_in(0)), Derivative::Plain(1, x.partial(1))];
        let y = integrate_gradient(&ds, &Cyclo::zero(1)).unwrap();
        assert_eq!(y.terms(), x.terms());
    }

    #[test]
    fn inconsistent_partials_are_rejected() {
        let ring = ring();
        let q = MultiSeries::variable(&ring, 0);
        let s = MultiSeries::variable(&ring, 1);
        let ds = vec![Derivative::Logarithmic(0, q.mul(&s)), Derivative::Plain(1, q.scale_rational(&Rational::from_integer(BigInt::from(2))))];
        assert!(matches!(integrate_gradient(&ds, &Cyclo::zero(1)), Err(PotentialsError::NonIntegrable(_))));
    }
}

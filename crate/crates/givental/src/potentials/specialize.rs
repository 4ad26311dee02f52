//! The divisor-equation specialization: F^g([e^{−δ/z} q]₊, Q) against F^g(q, e^{δ}Q), with the
//! shift δ = ε·(δ₁,…,δ_r) carried by a formal parameter ε.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::One;

use super::descendant::{DescendantPotential, ResidualReport};
use super::PotentialsError;
use crate::fock::{CorrelatorStore, Key, Slot};
use crate::frobenius::{FrobeniusSpec, QuantumAlgebra};
use crate::series::{Matrix, MultiSeries, Rational, Ring, Variable};

/// A descendant store over the ring extended by ε, with every Q_i replaced by Q_i e^{εδ_i}.
#[derive(Clone, Debug)]
pub struct SpecializedPotential {
    pub ring: Arc<Ring>,
    /// Index of ε in `ring`.
    pub shift_variable: usize,
    pub delta: Vec<Rational>,
    pub store: CorrelatorStore,
}

struct Extension {
    ring: Arc<Ring>,
    eps: usize,
}

impl Extension {
    fn new(base: &Arc<Ring>, insertions: usize) -> Result<Self, PotentialsError> {
        let weight = &base.default_order / Rational::from_integer((insertions as i64 + 1).into());
        let mut vars = base.variables.clone();
        vars.push(Variable { name: "eps".into(), weight, euler_weight: Rational::one() });
        let ring = Ring::new(base.cyclotomic_order, base.puiseux_denominator, vars, base.default_order.clone())?;
        Ok(Extension { eps: base.nvars(), ring })
    }

    fn embed(&self, x: &MultiSeries) -> MultiSeries {
        let terms: BTreeMap<_, _> = x
            .terms()
            .iter()
            .map(|(e, c)| {
                let mut f = e.clone();
                f.push(0);
                (f, c.clone())
            })
            .collect();
        MultiSeries::from_terms(&self.ring, terms, x.truncation_order())
    }

    fn eps(&self) -> MultiSeries {
        MultiSeries::variable(&self.ring, self.eps)
    }

    /// Q_i ↦ Q_i e^{εδ_i} on a series of the base ring.
    fn rescale(&self, x: &MultiSeries, delta: &[Rational]) -> Result<MultiSeries, PotentialsError> {
        self.rescale_ext(&self.embed(x), delta)
    }
}

fn check_shift(spec: &FrobeniusSpec, delta: &[Rational]) -> Result<(), PotentialsError> {
    if delta.len() != spec.divisor_count {
        return Err(PotentialsError::InvalidShift(format!("{} components for {} divisors", delta.len(), spec.divisor_count)));
    }
    Ok(())
}

fn shift_too_coarse(potential: &DescendantPotential) -> Result<usize, PotentialsError> {
    let n = potential.store.bounds.max_insertions();
    if n < 2 {
        return Err(PotentialsError::TruncationTooCoarse("no room for a shifted insertion".into()));
    }
    Ok(n)
}

/// F^g(q, e^{εδ}Q) at the base point.
pub fn specialize_novikov(
    potential: &DescendantPotential,
    spec: &FrobeniusSpec,
    delta: &[Rational],
) -> Result<SpecializedPotential, PotentialsError> {
    check_shift(spec, delta)?;
    let ext = Extension::new(&potential.store.ring, shift_too_coarse(potential)?)?;
    let mut store = CorrelatorStore::new(&ext.ring, potential.store.dim, potential.store.bounds.clone());
    for (key, v) in potential.store.entries() {
        store.insert(key.clone(), ext.rescale(v, delta)?);
    }
    Ok(SpecializedPotential { ring: ext.ring.clone(), shift_variable: ext.eps, delta: delta.to_vec(), store })
}

/// Derivatives of F([e^{−εη/z} q]₊, Q) at the base point, known through ε^{n_max−|X|}.
fn shifted_point(
    potential: &DescendantPotential,
    ext: &Extension,
    cup: &Matrix,
    eta: &[Rational],
    key: &Key,
) -> Result<MultiSeries, PotentialsError> {
    let store = &potential.store;
    let dim = store.dim;
    let room = store.bounds.insertions_at(key.genus) - key.len();
    let max_psi = key.slots.iter().map(|s| s.psi as usize).max().unwrap_or(0);
    let mut steps = vec![Matrix::identity(&ext.ring, dim)];
    let minus_eps_cup = cup.scale(&ext.eps().neg());
    for j in 1..=max_psi {
        let next = steps[j - 1].mul(&minus_eps_cup).scale_rational(&Rational::new(1.into(), (j as i64).into()));
        steps.push(next);
    }
    let mut acc = MultiSeries::zero(&ext.ring);
    let mut eps_power = MultiSeries::one(&ext.ring);
    for extra in 0..=room {
        let mut extras: Vec<(Vec<Slot>, Rational)> = vec![(vec![], Rational::one())];
        for _ in 0..extra {
            extras = extras
                .into_iter()
                .flat_map(|(s, c)| {
                    eta.iter().enumerate().filter(|(_, d)| !num_traits::Zero::is_zero(*d)).map(move |(i, d)| {
                        let mut t = s.clone();
                        t.push(Slot::new(0, i + 1));
                        (t, &c * d)
                    })
                })
                .collect();
        }
        let mut level = MultiSeries::zero(&ext.ring);
        for (slots, c) in extras {
            let mut partial = vec![(slots, MultiSeries::from_rational(&ext.ring, c))];
            for s in &key.slots {
                let mut next = Vec::new();
                for (chosen, w) in &partial {
                    for j in 0..=s.psi as usize {
                        for b in 0..dim {
                            let coeff = steps[j].get(b, s.index);
                            if coeff.is_exactly_zero() {
                                continue;
                            }
                            let mut t = chosen.clone();
                            t.push(Slot::new(s.psi - j as u32, b));
                            next.push((t, w.mul(coeff)));
                        }
                    }
                }
                partial = next;
            }
            for (slots, w) in partial {
                let v = store.get(&Key::new(key.genus, slots))?;
                level = level.add(&ext.embed(&v).mul(&w));
            }
        }
        acc = acc.add(&level.mul(&eps_power));
        eps_power = eps_power.mul(&ext.eps()).scale_rational(&Rational::new(1.into(), ((extra + 1) as i64).into()));
    }
    let eps_weight = &ext.ring.variables[ext.eps].weight;
    let known = eps_weight * Rational::from_integer(((room + 1) as i64).into());
    Ok(match acc.truncation_order() {
        Some(o) if o < known => acc,
        _ => acc.truncate(&known),
    })
}

/// ∫₀^ε of the genus-zero classical exception ½∫η∪t₀∪t₀ of the divisor equation, differentiated
/// along X at the base point; nonzero only for |X| ≤ 2.
fn classical_defect(
    spec: &FrobeniusSpec,
    algebra: &QuantumAlgebra,
    ext: &Extension,
    cup: &Matrix,
    eta_vector: &[MultiSeries],
    key: &Key,
) -> Result<MultiSeries, PotentialsError> {
    if key.genus != 0 || key.len() > 2 {
        return Ok(MultiSeries::zero(&ext.ring));
    }
    let dim = algebra.rank();
    let g = algebra.pairing.map(|x| ext.embed(x));
    let s = ext.eps();
    let flow = |k: u32, a: usize| -> Vec<MultiSeries> {
        let mut v: Vec<MultiSeries> = (0..dim).map(|b| MultiSeries::from_int(&ext.ring, (a == b) as i64)).collect();
        for j in 1..=k {
            v = cup.apply(&v).iter().map(|x| x.mul(&s).neg().scale_rational(&Rational::new(1.into(), (j as i64).into()))).collect();
        }
        v
    };
    let pair = |x: &[MultiSeries], y: &[MultiSeries]| -> MultiSeries {
        let gy = g.apply(y);
        x.iter().zip(&gy).fold(MultiSeries::zero(&ext.ring), |acc, (p, q)| acc.add(&p.mul(q)))
    };
    let first = flow(key.slots[0].psi, key.slots[0].index);
    let other = if key.len() == 2 {
        flow(key.slots[1].psi, key.slots[1].index)
    } else {
        (0..dim).map(|c| ext.embed(&spec.base_coordinate(&algebra.ring, c)).add(&eta_vector[c].mul(&s))).collect()
    };
    Ok(pair(&cup.apply(&first), &other).integrate(ext.eps)?)
}

/// Compares F(q, e^{εδ}Q) with F([e^{−ε(δ−δ′)/z} q]₊, e^{εδ′}Q) on every entry, up to the
/// classical genus-zero term of the divisor equation.
pub fn presentation_residuals(
    potential: &DescendantPotential,
    spec: &FrobeniusSpec,
    algebra: &QuantumAlgebra,
    delta: &[Rational],
    delta_prime: &[Rational],
) -> Result<ResidualReport, PotentialsError> {
    check_shift(spec, delta)?;
    check_shift(spec, delta_prime)?;
    let ext = Extension::new(&potential.store.ring, shift_too_coarse(potential)?)?;
    let eta: Vec<Rational> = delta.iter().zip(delta_prime).map(|(a, b)| a - b).collect();
    let dim = algebra.rank();
    let mut cup = Matrix::zero(&ext.ring, dim);
    let mut eta_vector = vec![MultiSeries::zero(&ext.ring); dim];
    for (i, e) in eta.iter().enumerate() {
        let classical = algebra.products[i + 1].map(|x| MultiSeries::constant(&ext.ring, x.constant_term()));
        cup = cup.add(&classical.scale_rational(e));
        eta_vector[i + 1] = MultiSeries::from_rational(&ext.ring, e.clone());
    }
    let mut report = ResidualReport::default();
    for (key, v) in potential.store.entries() {
        let direct = ext.rescale(v, delta)?;
        let moved = shifted_point(potential, &ext, &cup, &eta, key)?;
        let defect = classical_defect(spec, algebra, &ext, &cup, &eta_vector, key)?;
        let other = ext.rescale_ext(&moved, delta_prime)?.sub(&defect);
        report.checked += 1;
        if !direct.agrees_with(&other) {
            report.failures.push(("presentation".into(), key.clone()));
        }
    }
    Ok(report)
}

impl Extension {
    /// Q_i ↦ Q_i e^{εδ_i} on a series already in the extended ring.
    fn rescale_ext(&self, x: &MultiSeries, delta: &[Rational]) -> Result<MultiSeries, PotentialsError> {
        let m = Rational::from_integer((self.ring.puiseux_denominator as i64).into());
        let mut acc = MultiSeries::from_terms(&self.ring, BTreeMap::new(), x.truncation_order());
        for (e, c) in x.terms() {
            let mut rate = Rational::from_integer(0.into());
            for (i, d) in delta.iter().enumerate() {
                rate += d * Rational::from_integer(e[i].into()) / &m;
            }
            let factor = self.eps().scale_rational(&rate).try_exp()?;
            acc = acc.add(&MultiSeries::monomial(&self.ring, e.clone(), c.clone()).mul(&factor));
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Bounds;
    use crate::potentials::{fundamental_solution, genus0_descendants};
    use num_bigint::BigInt;

    fn p1(precision: i64) -> (FrobeniusSpec, QuantumAlgebra, DescendantPotential) {
        let spec = FrobeniusSpec::shipped("p1").unwrap();
        let ring = spec.ring(&Rational::from_integer(BigInt::from(precision))).unwrap();
        let alg = QuantumAlgebra::new(&spec, &ring).unwrap();
        let l = fundamental_solution(&spec, &alg, 5).unwrap();
        let d = genus0_descendants(&spec, &alg, &l, &Bounds { genus: 0, insertions: vec![4], psi: 2 }).unwrap();
        (spec, alg, d)
    }

    #[test]
    fn zero_shift_is_the_identity() {
        let (spec, _, d) = p1(5);
        let s = specialize_novikov(&d, &spec, &[Rational::from_integer(0.into())]).unwrap();
        for (key, v) in d.store.entries() {
            let got = s.store.get(key).unwrap();
            assert_eq!(got.terms().len(), v.terms().len(), "{key}");
            assert!(got.terms().iter().all(|(e, c)| e[s.shift_variable] == 0 && v.coefficient(&e[..1]) == *c));
        }
    }

    #[test]
    fn p1_specialization_is_exponential_in_the_shift() {
        let (spec, _, d) = p1(5);
        let s = specialize_novikov(&d, &spec, &[Rational::one()]).unwrap();
        let h = Slot::new(0, 1);
        let got = s.store.get(&Key::new(0, vec![h, h, h])).unwrap();
        let q = MultiSeries::variable(&s.ring, 0);
        let expected = q.mul(&MultiSeries::variable(&s.ring, s.shift_variable).try_exp().unwrap());
        assert!(got.agrees_with(&expected));
        assert!(!got.is_zero());
    }

    #[test]
    fn shifted_presentations_agree() {
        let (spec, alg, d) = p1(5);
        let half = Rational::new(BigInt::from(1), BigInt::from(2));
        for (a, b) in [(Rational::one(), Rational::from_integer(0.into())), (half.clone(), -half)] {
            let report = presentation_residuals(&d, &spec, &alg, &[a], &[b]).unwrap();
            assert!(report.checked > 10);
            assert!(report.passed(), "{:?}", report.failures);
        }
    }
}

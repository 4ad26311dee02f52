//! Descendant potentials from ancestors: the change of variables q = [M x]₊ slot by slot, the
//! genus-one primary potential F¹(t), and the string, dilaton and divisor equations.

use super::ancestor::AncestorPotential;
use super::fundamental::FundamentalSolution;
use super::genus_zero::{descendant_keys, genus0_entries, lower_slots};
use super::gradient::{integrate_gradient, Derivative};
use super::PotentialsError;
use crate::fock::{Bounds, CorrelatorStore, Key, Slot};
use crate::frobenius::{FrobeniusSpec, QuantumAlgebra};
use crate::series::{Cyclo, Matrix, MultiSeries, Rational};

/// What to do with the genus-one primary potential F¹(t), which ancestors do not contain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenusOnePolicy {
    /// Integrate ∂_αF¹ = ⟨⟨φ_α⟩⟩₁ with zero constant term.
    Recover,
    /// Leave F¹(t) out; entries with n ≥ 1 are unaffected.
    Omit,
}

/// F¹ at the base point: linear classical part Σ c_α t^α plus a series in the ring variables.
#[derive(Clone, Debug)]
pub struct GenusOnePrimary {
    /// Constant terms of ∂_αF¹, the coefficients of the classical linear part.
    pub classical: Vec<Cyclo>,
    /// The remaining part of F¹ as a series with zero constant term.
    pub series: MultiSeries,
}

#[derive(Clone, Debug)]
pub struct DescendantPotential {
    /// Derivatives of F^g at the base point in the variables t_k^α (dilaton shift −φ₀z).
    pub store: CorrelatorStore,
    pub genus_one: Option<GenusOnePrimary>,
    pub policy: GenusOnePolicy,
}

/// Recovers F¹(t) from the one-point genus-one ancestors ⟨φ_α⟩₁ = ∂_αF¹(t).
pub fn recover_genus_one(
    spec: &FrobeniusSpec,
    algebra: &QuantumAlgebra,
    ancestors: &CorrelatorStore,
) -> Result<GenusOnePrimary, PotentialsError> {
    let ring = algebra.ring.clone();
    let dim = algebra.rank();
    let r = spec.divisor_count;
    let one_point: Vec<MultiSeries> =
        (0..dim).map(|a| ancestors.get(&Key::new(1, vec![Slot::new(0, a)]))).collect::<Result<_, _>>()?;
    if !one_point[0].is_zero() {
        return Err(PotentialsError::NonIntegrable("the unit direction carries a nonzero genus-one derivative".into()));
    }
    let classical: Vec<Cyclo> = one_point.iter().map(|c| c.constant_term()).collect();
    let mut derivatives = Vec::new();
    for i in 0..r {
        let c = &one_point[i + 1];
        derivatives.push(Derivative::Logarithmic(i, c.sub(&MultiSeries::constant(&ring, c.constant_term()))));
    }
    for (j, b) in spec.base_point.iter().enumerate() {
        derivatives.push(Derivative::Plain(r + j, one_point[b.coordinate].scale_rational(&b.scale)));
    }
    let series = if derivatives.is_empty() {
        MultiSeries::zero(&ring)
    } else {
        let mut s = integrate_gradient(&derivatives, &Cyclo::zero(ring.cyclotomic_order))?;
        for (j, b) in spec.base_point.iter().enumerate() {
            let linear = MultiSeries::variable(&ring, r + j).scale_rational(&b.scale).scale(&classical[b.coordinate]);
            s = s.sub(&linear);
        }
        s
    };
    Ok(GenusOnePrimary { classical, series })
}

/// Descendant correlators at the base point from an ancestor potential at the same point.
pub fn ancestor_to_descendant(
    ancestor: &AncestorPotential,
    spec: &FrobeniusSpec,
    algebra: &QuantumAlgebra,
    l: &FundamentalSolution,
    policy: GenusOnePolicy,
    bounds: &Bounds,
) -> Result<DescendantPotential, PotentialsError> {
    let ancestors = &ancestor.element.store;
    let have = &ancestors.bounds;
    for g in 0..=bounds.genus {
        if g > have.genus || bounds.insertions_at(g) > have.insertions_at(g) {
            return Err(PotentialsError::BoundsExceeded(format!("genus {g} with {} insertions", bounds.insertions_at(g))));
        }
    }
    let keys = descendant_keys(bounds, algebra.rank());
    let mut store = CorrelatorStore::new(&algebra.ring, algebra.rank(), bounds.clone());
    for (key, v) in genus0_entries(ancestors, l, &algebra.pairing, &keys)? {
        store.insert(key, v);
    }
    let higher: Vec<Key> = keys.into_iter().filter(|k| k.genus > 0).collect();
    let values = crate::fock::operator::parallel_map(&higher, |k| lower_slots(ancestors, k, l));
    for (key, v) in higher.into_iter().zip(values) {
        let v = v?;
        if !v.is_exactly_zero() {
            store.insert(key, v);
        }
    }
    let genus_one = match policy {
        GenusOnePolicy::Recover if bounds.genus >= 1 => Some(recover_genus_one(spec, algebra, ancestors)?),
        _ => None,
    };
    Ok(DescendantPotential { store, genus_one, policy })
}

/// Keys at which an equation failed, labelled by the equation.
#[derive(Clone, Debug, Default)]
pub struct ResidualReport {
    pub checked: usize,
    pub failures: Vec<(String, Key)>,
}

impl ResidualReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn merge(&mut self, other: ResidualReport) {
        self.checked += other.checked;
        self.failures.extend(other.failures);
    }
}

fn classical(m: &Matrix) -> Matrix {
    m.map(|x| MultiSeries::constant(x.ring(), x.constant_term()))
}

/// Σ over slots with ψ-power ≥ 1 of the entry with that slot replaced by τ_{k−1}(cup·φ_a).
fn lowered(store: &CorrelatorStore, rest: &Key, cup: Option<&Matrix>) -> Result<MultiSeries, PotentialsError> {
    let mut acc = MultiSeries::zero(&store.ring);
    for (j, s) in rest.slots.iter().enumerate() {
        if s.psi == 0 {
            continue;
        }
        let mut others = rest.slots.clone();
        others.remove(j);
        let images: Vec<(usize, MultiSeries)> = match cup {
            None => vec![(s.index, MultiSeries::one(&store.ring))],
            Some(m) => (0..store.dim).map(|b| (b, m.get(b, s.index).clone())).filter(|(_, c)| !c.is_exactly_zero()).collect(),
        };
        for (b, c) in images {
            let mut slots = others.clone();
            slots.push(Slot::new(s.psi - 1, b));
            acc = acc.add(&store.get(&Key::new(rest.genus, slots))?.mul(&c));
        }
    }
    Ok(acc)
}

/// String, dilaton and divisor equations on every entry of a descendant store whose other
/// entries are present.
pub fn descendant_residuals(
    potential: &DescendantPotential,
    spec: &FrobeniusSpec,
    algebra: &QuantumAlgebra,
) -> Result<ResidualReport, PotentialsError> {
    let store = &potential.store;
    let ring = &store.ring;
    let dim = store.dim;
    let g = &algebra.pairing;
    let base: Vec<MultiSeries> = (0..dim).map(|c| spec.base_coordinate(ring, c)).collect();
    let mut report = ResidualReport::default();
    let mut record = |name: &str, key: &Key, lhs: MultiSeries, rhs: MultiSeries| {
        report.checked += 1;
        if !lhs.agrees_with(&rhs) {
            report.failures.push((name.to_string(), key.clone()));
        }
    };
    for key in descendant_keys(&store.bounds, dim) {
        if key.len() < 2 {
            continue;
        }
        let key = &key;
        let value = &store.get(key)?;
        let genus_zero_primaries = |rest: &Key| key.genus == 0 && rest.slots.iter().all(|s| s.psi == 0);
        if let Some(rest) = key.without(Slot::new(0, 0)) {
            let mut rhs = lowered(store, &rest, None)?;
            if genus_zero_primaries(&rest) {
                rhs = rhs.add(&match rest.len() {
                    2 => g.get(rest.slots[0].index, rest.slots[1].index).clone(),
                    1 => (0..dim).fold(MultiSeries::zero(ring), |a, c| a.add(&base[c].mul(g.get(c, rest.slots[0].index)))),
                    _ => MultiSeries::zero(ring),
                });
            }
            record("string", key, value.clone(), rhs);
        }
        if let Some(rest) = key.without(Slot::new(1, 0)) {
            let n = rest.len() as i64;
            let mut rhs = store.get(&rest)?.scale_rational(&Rational::from_integer((2 * key.genus as i64 - 2 + n).into()));
            for c in 0..dim {
                if !base[c].is_exactly_zero() {
                    rhs = rhs.add(&base[c].mul(&store.get(&rest.with(&[Slot::new(0, c)]))?));
                }
            }
            record("dilaton", key, value.clone(), rhs);
        }
        for i in 0..spec.divisor_count {
            let Some(rest) = key.without(Slot::new(0, i + 1)) else { continue };
            let cup = classical(&algebra.products[i + 1]);
            let mut rhs = store.get(&rest)?.log_derivative_in(i).add(&lowered(store, &rest, Some(&cup))?);
            if genus_zero_primaries(&rest) {
                let pair = |x: usize, y: &[MultiSeries]| -> MultiSeries {
                    let hx = cup.column(x);
                    let gy = g.apply(y);
                    hx.iter().zip(&gy).fold(MultiSeries::zero(ring), |a, (p, q)| a.add(&p.mul(q)))
                };
                rhs = rhs.add(&match rest.len() {
                    2 => pair(rest.slots[0].index, &algebra.basis_vector(rest.slots[1].index)),
                    1 => pair(rest.slots[0].index, &base),
                    _ => MultiSeries::zero(ring),
                });
            }
            record("divisor", key, value.clone(), rhs);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::WittenKontsevich;
    use crate::potentials::{abstract_ancestor, fundamental_solution, Model};
    use num_bigint::BigInt;

    fn model(name: &str, precision: i64, order: usize) -> Model {
        let spec = FrobeniusSpec::shipped(name).unwrap();
        Model::new(&spec, &Rational::from_integer(BigInt::from(precision)), order).unwrap()
    }

    #[test]
    fn point_descendants_are_the_tau_store() {
        let m = model("point", 4, 8);
        let bounds = Bounds::tame(2, 3);
        let anc = abstract_ancestor(&m.algebra, &m.frame, &m.r, &bounds).unwrap();
        let l = fundamental_solution(&m.spec, &m.algebra, 9).unwrap();
        let window = Bounds { genus: 2, insertions: vec![3, 3, 3], psi: 4 };
        let d = ancestor_to_descendant(&anc, &m.spec, &m.algebra, &l, GenusOnePolicy::Recover, &window).unwrap();
        let wk = WittenKontsevich::new();
        for key in descendant_keys(&window, 1) {
            let idx: Vec<u32> = key.slots.iter().map(|s| s.psi).collect();
            let got = d.store.get(&key).unwrap();
            assert_eq!(got.constant_term().as_rational().unwrap(), wk.correlator(key.genus, &idx), "{key}");
        }
        assert!(descendant_residuals(&d, &m.spec, &m.algebra).unwrap().passed());
        assert!(d.genus_one.unwrap().series.is_zero());
    }

    #[test]
    fn p1_descendants_satisfy_string_dilaton_divisor() {
        let m = model("p1", 6, 8);
        let bounds = Bounds::tame(1, 3);
        let anc = abstract_ancestor(&m.algebra, &m.frame, &m.r, &bounds).unwrap();
        let l = fundamental_solution(&m.spec, &m.algebra, 6).unwrap();
        let window = Bounds { genus: 1, insertions: vec![3, 3], psi: 2 };
        let d = ancestor_to_descendant(&anc, &m.spec, &m.algebra, &l, GenusOnePolicy::Recover, &window).unwrap();
        let report = descendant_residuals(&d, &m.spec, &m.algebra).unwrap();
        assert!(report.checked > 20);
        assert!(report.passed(), "{:?}", report.failures);
        let g1 = d.genus_one.unwrap();
        assert_eq!(g1.classical[1].as_rational().unwrap(), Rational::new(BigInt::from(-1), BigInt::from(24)));
    }
}

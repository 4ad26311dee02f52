//! Genus-zero ancestors from the primary potential, and genus-zero descendants at the base point.

use std::cell::RefCell;
use std::collections::HashMap;

use super::descendant::{DescendantPotential, GenusOnePolicy};
use super::fundamental::FundamentalSolution;
use super::PotentialsError;
use crate::fock::store::label_multisets;
use crate::fock::{Bounds, CorrelatorStore, Key, Slot};
use crate::frobenius::{FrobeniusSpec, QuantumAlgebra};
use crate::series::{Matrix, MultiSeries};

struct TreeLevel<'a> {
    spec: &'a FrobeniusSpec,
    algebra: &'a QuantumAlgebra,
    memo: RefCell<HashMap<Key, MultiSeries>>,
}

impl TreeLevel<'_> {
    fn value(&self, key: &Key) -> MultiSeries {
        let ring = &self.algebra.ring;
        let n = key.len();
        if n < 3 || key.psi_total() as usize > n - 3 {
            return MultiSeries::zero(ring);
        }
        if let Some(v) = self.memo.borrow().get(key) {
            return v.clone();
        }
        let v = if key.psi_total() == 0 {
            let idx: Vec<usize> = key.slots.iter().map(|s| s.index).collect();
            self.spec.potential_derivative(ring, &idx)
        } else {
            self.split(key)
        };
        self.memo.borrow_mut().insert(key.clone(), v.clone());
        v
    }

    /// ψ̄₁ = Σ D(1 ∪ S | 2, 3 ∪ Sᶜ) on M̄_{0,n}.
    fn split(&self, key: &Key) -> MultiSeries {
        let ring = &self.algebra.ring;
        let dim = self.algebra.rank();
        let first = key.slots.iter().rposition(|s| s.psi > 0).unwrap();
        let a = key.slots[first];
        let others: Vec<Slot> = key.slots.iter().enumerate().filter(|(i, _)| *i != first).map(|(_, s)| *s).collect();
        let (b, c, rest) = (others[0], others[1], &others[2..]);
        let lowered = Slot::new(a.psi - 1, a.index);
        let mut acc = MultiSeries::zero(ring);
        for mask in 1u32..(1 << rest.len()) {
            let mut left = vec![lowered];
            let mut right = vec![b, c];
            for (p, s) in rest.iter().enumerate() {
                if mask & (1 << p) != 0 {
                    left.push(*s);
                } else {
                    right.push(*s);
                }
            }
            for e in 0..dim {
                let mut l = left.clone();
                l.push(Slot::new(0, e));
                let lv = self.value(&Key::new(0, l));
                if lv.is_zero() {
                    continue;
                }
                for f in 0..dim {
                    let gi = self.algebra.pairing_inverse.get(e, f);
                    if gi.is_zero() {
                        continue;
                    }
                    let mut r = right.clone();
                    r.push(Slot::new(0, f));
                    let rv = self.value(&Key::new(0, r));
                    if !rv.is_zero() {
                        acc = acc.add(&lv.mul(gi).mul(&rv));
                    }
                }
            }
        }
        acc
    }
}

/// Genus-zero ancestor correlators at the base point with up to `insertions` insertions,
/// from the primary potential by splitting ψ̄ along boundary divisors of M̄_{0,n}.
pub fn genus0_ancestors(spec: &FrobeniusSpec, algebra: &QuantumAlgebra, insertions: usize) -> CorrelatorStore {
    let tree = TreeLevel { spec, algebra, memo: RefCell::new(HashMap::new()) };
    let bounds = Bounds::per_genus(vec![insertions]);
    let mut store = CorrelatorStore::new(&algebra.ring, algebra.rank(), bounds.clone());
    for key in crate::fock::tame_keys(&bounds, algebra.rank()) {
        let v = tree.value(&key);
        if !v.is_zero() || !v.is_exact() {
            store.insert(key, v);
        }
    }
    store
}

/// Every key of genus g ≤ bounds.genus with 1 ≤ n ≤ insertions[g] and each ψ-power ≤ bounds.psi.
pub fn descendant_keys(bounds: &Bounds, dim: usize) -> Vec<Key> {
    let mut out = Vec::new();
    for g in 0..=bounds.genus {
        for n in 1..=bounds.insertions_at(g) {
            let budget = n as i64 * bounds.psi as i64;
            for slots in label_multisets(n, dim, budget, bounds.psi) {
                out.push(Key { genus: g, slots });
            }
        }
    }
    out
}

/// ∂ⁿF̄^g_t([L q]₊)/∂q…∂q: every descendant slot (k, a) reads ancestor slots (l, β), l ≤ k,
/// with weight (L_{k−l})_{βa}.
pub(crate) fn lower_slots(ancestors: &CorrelatorStore, key: &Key, l: &FundamentalSolution) -> Result<MultiSeries, PotentialsError> {
    let ring = ancestors.ring.clone();
    let n = key.len();
    let budget = 3 * key.genus as i64 - 3 + n as i64;
    let mut acc = MultiSeries::zero(&ring);
    let mut chosen: Vec<Slot> = Vec::with_capacity(n);
    #[allow(clippy::too_many_arguments)]
    fn rec(
        r: usize,
        budget: i64,
        key: &Key,
        l: &FundamentalSolution,
        ancestors: &CorrelatorStore,
        chosen: &mut Vec<Slot>,
        weight: &MultiSeries,
        acc: &mut MultiSeries,
    ) -> Result<(), PotentialsError> {
        if r == key.len() {
            let v = ancestors.get(&Key::new(key.genus, chosen.clone()))?;
            if !v.is_zero() {
                *acc = acc.add(&v.mul(weight));
            }
            return Ok(());
        }
        let target = key.slots[r];
        let used: i64 = chosen.iter().map(|s| s.psi as i64).sum();
        for low in 0..=target.psi {
            if used + low as i64 > budget {
                break;
            }
            let step = (target.psi - low) as usize;
            if step > l.order() {
                return Err(PotentialsError::InsufficientOrder(format!("L known through z^-{}", l.order())));
            }
            for beta in 0..ancestors.dim {
                let c = l.coeffs[step].get(beta, target.index);
                if c.is_zero() && c.is_exact() {
                    continue;
                }
                chosen.push(Slot::new(low, beta));
                rec(r + 1, budget, key, l, ancestors, chosen, &weight.mul(c), acc)?;
                chosen.pop();
            }
        }
        Ok(())
    }
    rec(0, budget, key, l, ancestors, &mut chosen, &MultiSeries::one(&ring), &mut acc)?;
    Ok(acc)
}

/// ⟨⟨τ_k(a) τ_m(b)⟩⟩₀ = ∂²/∂q_k^a∂q_m^b of ½Ω([Lq]₊, Lq).
pub(crate) fn two_point(l: &FundamentalSolution, pairing: &Matrix, a: Slot, b: Slot) -> Result<MultiSeries, PotentialsError> {
    let (k, m) = (a.psi as usize, b.psi as usize);
    if k + m + 1 > l.order() {
        return Err(PotentialsError::InsufficientOrder(format!("L known through z^-{}, need z^-{}", l.order(), k + m + 1)));
    }
    let ring = pairing.ring().clone();
    let form = |i: usize, x: usize, j: usize, y: usize| -> MultiSeries {
        let gx = pairing.apply(&l.coeffs[j].column(y));
        let lx = l.coeffs[i].column(x);
        let mut s = MultiSeries::zero(&ring);
        for (p, q) in lx.iter().zip(&gx) {
            s = s.add(&p.mul(q));
        }
        s
    };
    let mut acc = MultiSeries::zero(&ring);
    for j in 0..=k {
        let t = form(k - j, a.index, m + 1 + j, b.index);
        acc = if j % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
    }
    for j in 0..=m {
        let t = form(m - j, b.index, k + 1 + j, a.index);
        acc = if j % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
    }
    Ok(acc.scale_rational(&crate::series::Rational::new(1.into(), 2.into())))
}

/// Genus-zero descendant entries from genus-zero ancestors: n ≥ 3 through [Lq]₊, n = 2 from the
/// quadratic form, n = 1 from the string equation ⟨⟨τ_k(a)⟩⟩₀ = ⟨⟨τ₀(φ₀)τ_{k+1}(a)⟩⟩₀.
pub(crate) fn genus0_entries(
    ancestors: &CorrelatorStore,
    l: &FundamentalSolution,
    pairing: &Matrix,
    keys: &[Key],
) -> Result<Vec<(Key, MultiSeries)>, PotentialsError> {
    let mut out = Vec::new();
    for key in keys.iter().filter(|k| k.genus == 0) {
        let v = match key.len() {
            1 => two_point(l, pairing, Slot::new(0, 0), Slot::new(key.slots[0].psi + 1, key.slots[0].index))?,
            2 => two_point(l, pairing, key.slots[0], key.slots[1])?,
            _ => lower_slots(ancestors, key, l)?,
        };
        out.push((key.clone(), v));
    }
    Ok(out)
}

/// Genus-zero descendants at the base point from the primary potential and L.
pub fn genus0_descendants(
    spec: &FrobeniusSpec,
    algebra: &QuantumAlgebra,
    l: &FundamentalSolution,
    bounds: &Bounds,
) -> Result<DescendantPotential, PotentialsError> {
    let n = bounds.insertions_at(0);
    let ancestors = genus0_ancestors(spec, algebra, n.max(3));
    let window = Bounds { genus: 0, insertions: vec![n], psi: bounds.psi };
    let keys = descendant_keys(&window, algebra.rank());
    let mut store = CorrelatorStore::new(&algebra.ring, algebra.rank(), window);
    for (key, v) in genus0_entries(&ancestors, l, &algebra.pairing, &keys)? {
        store.insert(key, v);
    }
    Ok(DescendantPotential { store, genus_one: None, policy: GenusOnePolicy::Omit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::fundamental_solution;
    use crate::series::Rational;
    use num_bigint::BigInt;

    fn setup(name: &str, precision: i64) -> (FrobeniusSpec, QuantumAlgebra) {
        let spec = FrobeniusSpec::shipped(name).unwrap();
        let ring = spec.ring(&Rational::from_integer(BigInt::from(precision))).unwrap();
        let alg = QuantumAlgebra::new(&spec, &ring).unwrap();
        (spec, alg)
    }

    #[test]
    fn point_ancestors_are_genus_zero_intersection_numbers() {
        let (spec, alg) = setup("point", 4);
        let store = genus0_ancestors(&spec, &alg, 6);
        let wk = crate::fock::WittenKontsevich::new();
        for (k, v) in store.entries() {
            let idx: Vec<u32> = k.slots.iter().map(|s| s.psi).collect();
            assert_eq!(v.constant_term().as_rational().unwrap(), wk.correlator(0, &idx), "{k}");
        }
        assert_eq!(store.get(&Key::new(0, vec![Slot::new(1, 0), Slot::new(1, 0), Slot::new(0, 0), Slot::new(0, 0), Slot::new(0, 0)])).unwrap().constant_term().as_rational().unwrap(), Rational::from_integer(BigInt::from(2)));
    }

    #[test]
    fn p1_three_point_primaries_are_structure_constants() {
        let (spec, alg) = setup("p1", 6);
        let store = genus0_ancestors(&spec, &alg, 3);
        let q = MultiSeries::variable(&alg.ring, 0);
        let h = Slot::new(0, 1);
        assert!(store.get(&Key::new(0, vec![h, h, h])).unwrap().agrees_with(&q));
        assert!(store.get(&Key::new(0, vec![Slot::new(0, 0), Slot::new(0, 0), h])).unwrap().agrees_with(&MultiSeries::one(&alg.ring)));
    }

    #[test]
    fn point_descendants_are_the_tau_numbers() {
        let (spec, alg) = setup("point", 4);
        let l = fundamental_solution(&spec, &alg, 7).unwrap();
        let d = genus0_descendants(&spec, &alg, &l, &Bounds { genus: 0, insertions: vec![5], psi: 3 }).unwrap();
        let wk = crate::fock::WittenKontsevich::new();
        for (k, v) in d.store.entries() {
            let idx: Vec<u32> = k.slots.iter().map(|s| s.psi).collect();
            assert_eq!(v.constant_term().as_rational().unwrap(), wk.correlator(0, &idx), "{k}");
        }
    }
}

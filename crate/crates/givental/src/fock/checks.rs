//! String and dilaton equations on correlator stores.

use super::store::{label_multisets, tame_keys, Bounds, CorrelatorStore, Key, Slot};
use super::FockError;
use crate::series::{Matrix, MultiSeries};

fn inner_bounds(store: &CorrelatorStore) -> Bounds {
    Bounds {
        insertions: store.bounds.insertions.iter().map(|&n| n.saturating_sub(1)).collect(),
        ..store.bounds.clone()
    }
}

/// Keys K on which the dilaton equation
/// Σ_α δ^α ⟨(1,α) K⟩_g = (2g − 2 + n)⟨K⟩_g
/// fails, for a store expanded at q = −δz. Only keys with K ∪ {(1,α)} inside the bounds are checked.
pub fn dilaton_residuals(store: &CorrelatorStore, shift: &[MultiSeries]) -> Result<Vec<Key>, FockError> {
    let mut bad = Vec::new();
    for key in tame_keys(&inner_bounds(store), store.dim) {
        let mut lhs = MultiSeries::zero(&store.ring);
        for (a, d) in shift.iter().enumerate() {
            if d.is_zero() {
                continue;
            }
            lhs = lhs.add(&store.get(&key.with(&[Slot::new(1, a)]))?.mul(d));
        }
        let euler = 2 * key.genus as i64 - 2 + key.len() as i64;
        let rhs = store.get(&key)?.mul(&MultiSeries::from_int(&store.ring, euler));
        if !lhs.agrees_with(&rhs) {
            bad.push(key);
        }
    }
    Ok(bad)
}

/// Keys K on which the string equation
/// ⟨(0,u) K⟩_g = Σ_j ⟨K with ψ lowered in slot j⟩_g (+ η_ab in genus 0 with K = {(0,a),(0,b)})
/// fails, for a descendant-type store with unit index `unit` and pairing η.
pub fn string_residuals(store: &CorrelatorStore, unit: usize, pairing: &Matrix) -> Result<Vec<Key>, FockError> {
    let mut bad = Vec::new();
    let inner = inner_bounds(store);
    let mut candidates = Vec::new();
    for g in 0..=inner.genus {
        for n in 1..=inner.insertions_at(g) {
            let budget = 3 * g as i64 - 2 + n as i64;
            for slots in label_multisets(n, store.dim, budget, inner.psi) {
                candidates.push(Key { genus: g, slots });
            }
        }
    }
    for key in candidates {
        let extended = key.with(&[Slot::new(0, unit)]);
        if !extended.is_stable() || !store.bounds.contains(&extended) {
            continue;
        }
        let lhs = store.get(&extended)?;
        let mut rhs = MultiSeries::zero(&store.ring);
        let mut previous: Option<Slot> = None;
        for &s in &key.slots {
            if s.psi == 0 || previous == Some(s) {
                continue;
            }
            previous = Some(s);
            let count = key.slots.iter().filter(|&&t| t == s).count() as i64;
            let lowered = key.without(s).unwrap().with(&[Slot::new(s.psi - 1, s.index)]);
            if lowered.is_stable() {
                rhs = rhs.add(&store.get(&lowered)?.mul(&MultiSeries::from_int(&store.ring, count)));
            }
        }
        if key.genus == 0 && key.len() == 2 && key.psi_total() == 0 {
            rhs = rhs.add(pairing.get(key.slots[0].index, key.slots[1].index));
        }
        if !lhs.agrees_with(&rhs) {
            bad.push(key);
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::tau::tau_point;
    use crate::fock::tau_product;
    use crate::series::Ring;

    #[test]
    fn tau_store_satisfies_both_equations() {
        let store = tau_point(2, 4);
        let ring = store.ring.clone();
        let one = vec![MultiSeries::one(&ring)];
        assert!(dilaton_residuals(&store, &one).unwrap().is_empty());
        assert!(string_residuals(&store, 0, &Matrix::identity(&ring, 1)).unwrap().is_empty());
    }

    #[test]
    fn shifted_product_satisfies_dilaton() {
        let ring = Ring::constants(1);
        let shift = vec![MultiSeries::from_int(&ring, 2), MultiSeries::from_int(&ring, 3)];
        let inverse: Vec<MultiSeries> = shift.iter().map(|x| x.inv()).collect();
        let e = tau_product(&ring, &shift, &inverse, Bounds::tame(2, 3));
        assert!(dilaton_residuals(&e.store, &shift).unwrap().is_empty());
    }

    #[test]
    fn corrupted_store_is_detected() {
        let mut store = tau_point(1, 3);
        let ring = store.ring.clone();
        let key = Key::new(1, vec![Slot::new(1, 0), Slot::new(1, 0)]);
        store.insert(key, MultiSeries::from_int(&ring, 7));
        let one = vec![MultiSeries::one(&ring)];
        assert!(!dilaton_residuals(&store, &one).unwrap().is_empty());
        assert!(!string_residuals(&store, 0, &Matrix::identity(&ring, 1)).unwrap().is_empty());
    }
}

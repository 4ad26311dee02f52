//! Tame correlator stores and elements of the Fock space.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::FockError;
use crate::series::{Matrix, MultiSeries, Rational, Ring};

/// An insertion label (i, α): ψ-power i on basis vector α.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub psi: u32,
    pub index: usize,
}

impl Slot {
    pub fn new(psi: u32, index: usize) -> Self {
        Slot { psi, index }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.psi, self.index)
    }
}

/// Genus together with a sorted multiset of insertion labels.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key {
    pub genus: u32,
    pub slots: Vec<Slot>,
}

impl Key {
    pub fn new(genus: u32, mut slots: Vec<Slot>) -> Self {
        slots.sort();
        Key { genus, slots }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn psi_total(&self) -> u32 {
        self.slots.iter().map(|s| s.psi).sum()
    }

    /// 3g − 3 + n, the dimension of M̄_{g,n}.
    pub fn dimension(&self) -> i64 {
        3 * self.genus as i64 - 3 + self.slots.len() as i64
    }

    pub fn is_tame(&self) -> bool {
        self.psi_total() as i64 <= self.dimension()
    }

    /// Stable range 2g − 2 + n > 0.
    pub fn is_stable(&self) -> bool {
        2 * self.genus as i64 - 2 + self.slots.len() as i64 > 0
    }

    pub fn with(&self, extra: &[Slot]) -> Key {
        let mut slots = self.slots.clone();
        slots.extend_from_slice(extra);
        Key::new(self.genus, slots)
    }

    /// Removes one occurrence of `slot`.
    pub fn without(&self, slot: Slot) -> Option<Key> {
        let pos = self.slots.iter().position(|s| *s == slot)?;
        let mut slots = self.slots.clone();
        slots.remove(pos);
        Some(Key { genus: self.genus, slots })
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.slots.iter().map(|s| s.to_string()).collect();
        write!(f, "g={} [{}]", self.genus, s.join(","))
    }
}

/// Completeness window of a store: every nonzero entry of genus g ≤ genus with
/// 1 ≤ n ≤ insertions[g] and every ψ-power ≤ psi is present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub genus: u32,
    pub insertions: Vec<usize>,
    pub psi: u32,
}

impl Bounds {
    /// Uniform insertion bound; the ψ-window is never binding for tame entries.
    pub fn tame(genus: u32, insertions: usize) -> Self {
        Self::per_genus(vec![insertions; genus as usize + 1])
    }

    /// Insertion bound `insertions[g]` in genus g.
    pub fn per_genus(insertions: Vec<usize>) -> Self {
        assert!(!insertions.is_empty());
        let genus = insertions.len() as u32 - 1;
        let top = insertions.iter().enumerate().map(|(g, &n)| 3 * g as u32 + n as u32).max().unwrap();
        Bounds { genus, insertions, psi: top }
    }

    pub fn insertions_at(&self, genus: u32) -> usize {
        self.insertions.get(genus as usize).copied().unwrap_or(0)
    }

    pub fn max_insertions(&self) -> usize {
        self.insertions.iter().copied().max().unwrap_or(0)
    }

    pub fn contains(&self, key: &Key) -> bool {
        key.genus <= self.genus
            && !key.slots.is_empty()
            && key.slots.len() <= self.insertions_at(key.genus)
            && key.slots.iter().all(|s| s.psi <= self.psi)
    }

    /// Pointwise the smaller of two windows.
    pub fn meet(&self, other: &Bounds) -> Bounds {
        let genus = self.genus.min(other.genus);
        let insertions = (0..=genus).map(|g| self.insertions_at(g).min(other.insertions_at(g))).collect();
        Bounds { genus, insertions, psi: self.psi.min(other.psi) }
    }

    /// Every key of `other` lies inside `self`.
    pub fn covers(&self, other: &Bounds) -> bool {
        other.genus <= self.genus
            && other.psi <= self.psi
            && (0..=other.genus).all(|g| other.insertions_at(g) <= self.insertions_at(g))
    }
}

/// All sorted label multisets of size n over `dim` indices with Σψ ≤ budget and ψ ≤ psi_max.
pub fn label_multisets(n: usize, dim: usize, budget: i64, psi_max: u32) -> Vec<Vec<Slot>> {
    fn rec(n: usize, dim: usize, budget: i64, psi_max: u32, min: Slot, cur: &mut Vec<Slot>, out: &mut Vec<Vec<Slot>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let remaining = (n - cur.len()) as i64;
        for psi in min.psi..=psi_max {
            if (psi as i64) * remaining > budget {
                break;
            }
            let start = if psi == min.psi { min.index } else { 0 };
            for index in start..dim {
                let s = Slot::new(psi, index);
                cur.push(s);
                rec(n, dim, budget - psi as i64, psi_max, s, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    if budget < 0 {
        return out;
    }
    rec(n, dim, budget, psi_max, Slot::new(0, 0), &mut Vec::new(), &mut out);
    out
}

/// Every tame key within the bounds.
pub fn tame_keys(bounds: &Bounds, dim: usize) -> Vec<Key> {
    let mut out = Vec::new();
    for g in 0..=bounds.genus {
        for n in 1..=bounds.insertions_at(g) {
            let budget = 3 * g as i64 - 3 + n as i64;
            if 2 * g as i64 - 2 + n as i64 <= 0 {
                continue;
            }
            for slots in label_multisets(n, dim, budget, bounds.psi) {
                out.push(Key { genus: g, slots });
            }
        }
    }
    out
}

/// Correlators ∂ⁿF^g/∂y…∂y at the origin, keyed by genus and sorted labels.
#[derive(Clone, Debug)]
pub struct CorrelatorStore {
    pub ring: Arc<Ring>,
    pub dim: usize,
    pub bounds: Bounds,
    entries: BTreeMap<Key, MultiSeries>,
}

impl CorrelatorStore {
    pub fn new(ring: &Arc<Ring>, dim: usize, bounds: Bounds) -> Self {
        CorrelatorStore { ring: ring.clone(), dim, bounds, entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, key: Key, value: MultiSeries) {
        if value.is_zero() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, value);
        }
    }

    /// Entry value; zero when absent inside the bounds.
    pub fn get(&self, key: &Key) -> Result<MultiSeries, FockError> {
        if !self.bounds.contains(key) {
            return Err(FockError::BoundsExceeded(key.to_string()));
        }
        Ok(self.entries.get(key).cloned().unwrap_or_else(|| MultiSeries::zero(&self.ring)))
    }

    pub fn lookup(&self, key: &Key) -> Option<&MultiSeries> {
        self.entries.get(key)
    }

    pub fn entries(&self) -> &BTreeMap<Key, MultiSeries> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter_genus(&self, genus: u32, n: usize) -> impl Iterator<Item = (&Key, &MultiSeries)> {
        self.entries.iter().filter(move |(k, _)| k.genus == genus && k.slots.len() == n)
    }

    /// Tameness and the unstable-range vanishing conditions.
    pub fn is_tame(&self) -> bool {
        self.entries.keys().all(|k| k.is_tame() && k.is_stable())
    }

    pub fn map_values(&self, f: impl Fn(&MultiSeries) -> MultiSeries) -> Self {
        let mut out = CorrelatorStore::new(&self.ring, self.dim, self.bounds.clone());
        for (k, v) in &self.entries {
            out.insert(k.clone(), f(v));
        }
        out
    }

    /// Restriction to smaller bounds.
    pub fn restrict(&self, bounds: Bounds) -> Self {
        let mut out = CorrelatorStore::new(&self.ring, self.dim, bounds.clone());
        for (k, v) in &self.entries {
            if bounds.contains(k) {
                out.insert(k.clone(), v.clone());
            }
        }
        out
    }

    /// Keys inside both windows on which the two stores disagree to known order.
    pub fn differences(&self, other: &Self, bounds: &Bounds) -> Vec<Key> {
        let zero = MultiSeries::zero(&self.ring);
        let mut keys: Vec<&Key> = self.entries.keys().chain(other.entries.keys()).filter(|k| bounds.contains(k)).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .filter(|k| {
                let a = self.entries.get(*k).unwrap_or(&zero);
                let b = other.entries.get(*k).unwrap_or(&zero);
                !a.agrees_with(b)
            })
            .cloned()
            .collect()
    }

    /// One record per (entry, monomial): genus, labels, exponent vector, coefficient.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let labels: Vec<String> = k.slots.iter().map(|s| s.to_string()).collect();
            out.push_str(&format!("{}\t[{}]\t{}\n", k.genus, labels.join(","), v.to_canonical()));
        }
        out
    }

    pub fn parse_dump(ring: &Arc<Ring>, dim: usize, bounds: Bounds, text: &str) -> Result<Self, FockError> {
        let mut store = CorrelatorStore::new(ring, dim, bounds);
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let mut parts = line.splitn(3, '\t');
            let bad = || FockError::Parse(line.to_string());
            let genus: u32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let labels = parts.next().ok_or_else(bad)?;
            let value = MultiSeries::parse(ring, parts.next().ok_or_else(bad)?).map_err(|_| bad())?;
            let inner = labels.trim_start_matches('[').trim_end_matches(']');
            let mut slots = Vec::new();
            for item in inner.split(")").filter(|s| !s.trim_matches(',').is_empty()) {
                let item = item.trim_start_matches(',').trim_start_matches('(');
                let (a, b) = item.split_once(',').ok_or_else(bad)?;
                slots.push(Slot::new(a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?));
            }
            store.insert(Key::new(genus, slots), value);
        }
        Ok(store)
    }
}

/// A product of linear forms in q₁, the discriminant of a rational element.
#[derive(Clone, Debug)]
pub struct Discriminant {
    /// Each factor is the coefficient vector of a linear form in q₁.
    pub factors: Vec<Vec<MultiSeries>>,
}

impl Discriminant {
    /// ∏_α (−q₁^α) on a space of dimension `dim`.
    pub fn coordinate_product(ring: &Arc<Ring>, dim: usize) -> Self {
        let factors = (0..dim)
            .map(|a| (0..dim).map(|b| if a == b { MultiSeries::from_int(ring, -1) } else { MultiSeries::zero(ring) }).collect())
            .collect();
        Discriminant { factors }
    }

    pub fn evaluate(&self, q1: &[MultiSeries]) -> MultiSeries {
        let ring = q1[0].ring().clone();
        let mut acc = MultiSeries::one(&ring);
        for f in &self.factors {
            let mut lin = MultiSeries::zero(&ring);
            for (c, x) in f.iter().zip(q1) {
                lin = lin.add(&c.mul(x));
            }
            acc = acc.mul(&lin);
        }
        acc
    }

    /// P(B q₁) for a linear map B.
    pub fn pull_back(&self, b: &Matrix) -> Self {
        let factors = self
            .factors
            .iter()
            .map(|f| {
                let n = b.dim();
                (0..n)
                    .map(|j| {
                        let mut acc = MultiSeries::zero(b.ring());
                        for (i, c) in f.iter().enumerate() {
                            acc = acc.add(&c.mul(b.get(i, j)));
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        Discriminant { factors }
    }
}

/// Weight c and discriminant P of a rational element: F¹ restricted to y = y₁z is c log P(q₁).
#[derive(Clone, Debug)]
pub struct Rationality {
    pub weight: Rational,
    pub discriminant: Discriminant,
}

/// An element of Fock(V, δ): a store of correlators at q = −δz on V with pairing `pairing`.
#[derive(Clone, Debug)]
pub struct FockElement {
    pub store: CorrelatorStore,
    pub shift: Vec<MultiSeries>,
    pub pairing: Matrix,
    pub rationality: Option<Rationality>,
}

impl FockElement {
    pub fn ring(&self) -> &Arc<Ring> {
        &self.store.ring
    }

    pub fn dim(&self) -> usize {
        self.store.dim
    }

    /// P(−δ) = 1 whenever rationality data is present.
    pub fn rationality_normalized(&self) -> bool {
        match &self.rationality {
            None => true,
            Some(r) => {
                let neg: Vec<MultiSeries> = self.shift.iter().map(|x| x.neg()).collect();
                r.discriminant.evaluate(&neg).agrees_with(&MultiSeries::one(self.ring()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn tame_key_counts() {
        let b = Bounds::tame(1, 2);
        let keys = tame_keys(&b, 1);
        let texts: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
        assert!(!texts.contains(&"g=0 [(0,0),(0,0)]".to_string()));
        assert!(texts.contains(&"g=1 [(1,0)]".to_string()));
        assert!(texts.contains(&"g=1 [(0,0),(2,0)]".to_string()));
        assert!(keys.iter().all(|k| k.is_tame() && k.is_stable()));
    }

    #[test]
    fn out_of_bounds_lookup_is_an_error() {
        let ring = Ring::constants(1);
        let store = CorrelatorStore::new(&ring, 1, Bounds::tame(1, 2));
        let k = Key::new(2, vec![Slot::new(4, 0)]);
        assert!(matches!(store.get(&k), Err(FockError::BoundsExceeded(_))));
        assert!(store.get(&Key::new(1, vec![Slot::new(1, 0)])).unwrap().is_zero());
    }

    #[test]
    fn dump_round_trip() {
        let ring = Ring::constants(1);
        let mut store = CorrelatorStore::new(&ring, 2, Bounds::tame(1, 3));
        store.insert(Key::new(0, vec![Slot::new(0, 0), Slot::new(0, 1), Slot::new(0, 1)]), MultiSeries::from_int(&ring, 3));
        store.insert(
            Key::new(1, vec![Slot::new(1, 1)]),
            MultiSeries::from_rational(&ring, Rational::new(BigInt::from(1), BigInt::from(24))),
        );
        let text = store.dump();
        let back = CorrelatorStore::parse_dump(&ring, 2, store.bounds.clone(), &text).unwrap();
        assert_eq!(back.entries(), store.entries());
    }

    #[test]
    fn coordinate_discriminant_is_one_at_shift() {
        let ring = Ring::constants(1);
        let p = Discriminant::coordinate_product(&ring, 3);
        let minus_delta = vec![MultiSeries::from_int(&ring, -1); 3];
        assert_eq!(p.evaluate(&minus_delta), MultiSeries::one(&ring));
        let elsewhere = vec![MultiSeries::from_int(&ring, 2); 3];
        assert_eq!(p.evaluate(&elsewhere), MultiSeries::from_int(&ring, -8));
    }
}

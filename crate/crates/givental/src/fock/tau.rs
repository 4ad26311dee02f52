//! ψ-class intersection numbers on M̄_{g,n} and the Witten–Kontsevich Fock element.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::store::{label_multisets, tame_keys, Bounds, CorrelatorStore, Discriminant, FockElement, Key, Rationality, Slot};
use super::FockError;
use crate::series::{Matrix, MultiSeries, Rational, Ring};

fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// (2d − 1)!! with (−1)!! = 1.
fn double_factorial_odd(d: i64) -> Rational {
    let mut acc = BigInt::one();
    let mut k = 2 * d - 1;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    Rational::from_integer(acc)
}

fn dimension_matches(genus: u32, indices: &[u32]) -> bool {
    let total: i64 = indices.iter().map(|&k| k as i64).sum();
    total == 3 * genus as i64 - 3 + indices.len() as i64
}

fn stable(genus: u32, n: usize) -> bool {
    2 * genus as i64 - 2 + n as i64 > 0
}

/// ⟨τ_{k₁}…τ_{kₙ}⟩_g by the Dijkgraaf–Verlinde–Verlinde recursion.
#[derive(Default)]
pub struct WittenKontsevich {
    memo: RefCell<HashMap<(u32, Vec<u32>), Rational>>,
}

impl WittenKontsevich {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn correlator(&self, genus: u32, indices: &[u32]) -> Rational {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        if !stable(genus, sorted.len()) || !dimension_matches(genus, &sorted) {
            return Rational::zero();
        }
        if let Some(v) = self.memo.borrow().get(&(genus, sorted.clone())) {
            return v.clone();
        }
        let v = self.compute(genus, &sorted);
        self.memo.borrow_mut().insert((genus, sorted), v.clone());
        v
    }

    fn compute(&self, genus: u32, sorted: &[u32]) -> Rational {
        if genus == 0 && sorted == [0, 0, 0] {
            return Rational::one();
        }
        if genus == 1 && sorted == [1] {
            return Rational::new(BigInt::from(1), BigInt::from(24));
        }
        let last = *sorted.last().unwrap();
        if last == 0 {
            let rest = &sorted[..sorted.len() - 1];
            let mut acc = Rational::zero();
            let mut previous = None;
            for j in 0..rest.len() {
                if rest[j] > 0 && previous != Some(rest[j]) {
                    previous = Some(rest[j]);
                    let count = rest.iter().filter(|&&x| x == rest[j]).count() as i64;
                    let mut l = rest.to_vec();
                    l[j] -= 1;
                    acc += rat(count) * self.correlator(genus, &l);
                }
            }
            return acc;
        }
        if last == 1 {
            let rest = &sorted[..sorted.len() - 1];
            let euler = 2 * genus as i64 - 2 + rest.len() as i64;
            return rat(euler) * self.correlator(genus, rest);
        }
        let lead = sorted[0];
        let rest = &sorted[1..];
        if lead == 0 {
            // string equation
            let mut acc = Rational::zero();
            for j in 0..rest.len() {
                if rest[j] > 0 {
                    let mut l = rest.to_vec();
                    l[j] -= 1;
                    acc += self.correlator(genus, &l);
                }
            }
            return acc;
        }
        let k = lead as i64 - 1;
        let mut acc = Rational::zero();
        for j in 0..rest.len() {
            let d = rest[j] as i64;
            let mut l = rest.to_vec();
            l[j] = (d + k) as u32;
            acc += double_factorial_odd(k + d + 1) / double_factorial_odd(d) * self.correlator(genus, &l);
        }
        let mut quad = Rational::zero();
        for r in 0..k.max(0) {
            let s = k - 1 - r;
            let weight = double_factorial_odd(r + 1) * double_factorial_odd(s + 1);
            let mut term = Rational::zero();
            if genus > 0 {
                let mut l = vec![r as u32, s as u32];
                l.extend_from_slice(rest);
                term += self.correlator(genus - 1, &l);
            }
            let n = rest.len();
            for mask in 0..(1u32 << n) {
                let mut left = vec![r as u32];
                let mut right = vec![s as u32];
                for (p, &x) in rest.iter().enumerate() {
                    if mask & (1 << p) != 0 {
                        left.push(x);
                    } else {
                        right.push(x);
                    }
                }
                for g1 in 0..=genus {
                    let a = self.correlator(g1, &left);
                    if a.is_zero() {
                        continue;
                    }
                    term += a * self.correlator(genus - g1, &right);
                }
            }
            quad += weight * term;
        }
        acc += quad / rat(2);
        acc / double_factorial_odd(k + 2)
    }
}

/// Second evaluation: string and dilaton equations plus the genus-expanded KdV hierarchy
/// (2n+1)⟨⟨τ_n τ₀²⟩⟩ = ⟨⟨τ_{n−1}τ₀⟩⟩⟨⟨τ₀³⟩⟩ + 2⟨⟨τ_{n−1}τ₀²⟩⟩⟨⟨τ₀²⟩⟩ + ¼⟨⟨τ_{n−1}τ₀⁴⟩⟩.
#[derive(Default)]
pub struct KdvEvaluator {
    memo: RefCell<HashMap<(u32, Vec<u32>), Rational>>,
}

type Combination = BTreeMap<Vec<u32>, Rational>;

impl KdvEvaluator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn correlator(&self, genus: u32, indices: &[u32]) -> Rational {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        if !stable(genus, sorted.len()) || !dimension_matches(genus, &sorted) {
            return Rational::zero();
        }
        if genus == 0 && sorted == [0, 0, 0] {
            return Rational::one();
        }
        if genus == 1 && sorted == [1] {
            return Rational::new(BigInt::from(1), BigInt::from(24));
        }
        if let Some(v) = self.memo.borrow().get(&(genus, sorted.clone())) {
            return v.clone();
        }
        let v = if sorted[0] == 0 {
            let rest = &sorted[1..];
            let mut acc = Rational::zero();
            for j in 0..rest.len() {
                if rest[j] > 0 {
                    let mut l = rest.to_vec();
                    l[j] -= 1;
                    acc += self.correlator(genus, &l);
                }
            }
            acc
        } else if sorted[0] == 1 {
            let rest = &sorted[1..];
            rat(2 * genus as i64 - 2 + rest.len() as i64) * self.correlator(genus, rest)
        } else {
            self.solve(genus, &sorted)
        };
        self.memo.borrow_mut().insert((genus, sorted), v.clone());
        v
    }

    /// Removes every τ₀ by the string equation, leaving τ₀-free multisets.
    fn string_expand(genus: u32, indices: &[u32]) -> Combination {
        let mut current: Combination = BTreeMap::new();
        let mut start = indices.to_vec();
        start.sort_unstable();
        current.insert(start, Rational::one());
        loop {
            let mut next: Combination = BTreeMap::new();
            let mut changed = false;
            for (ms, c) in current {
                if ms.first() == Some(&0) && !(genus == 0 && ms.len() == 3) {
                    changed = true;
                    let rest = &ms[1..];
                    for j in 0..rest.len() {
                        if rest[j] > 0 {
                            let mut l = rest.to_vec();
                            l[j] -= 1;
                            l.sort_unstable();
                            *next.entry(l).or_insert_with(Rational::zero) += c.clone();
                        }
                    }
                } else {
                    *next.entry(ms).or_insert_with(Rational::zero) += c;
                }
            }
            current = next;
            if !changed {
                return current;
            }
        }
    }

    fn solve(&self, genus: u32, target: &[u32]) -> Rational {
        let k = *target.last().unwrap();
        let rest: Vec<u32> = target[..target.len() - 1].to_vec();
        let with = |extra: &[u32], base: &[u32]| {
            let mut v = extra.to_vec();
            v.extend_from_slice(base);
            v
        };
        let lhs = Self::string_expand(genus, &with(&[k + 2, 0, 0], &rest));
        let scale = rat(2 * k as i64 + 5);
        let self_term = Self::string_expand(genus, &with(&[k + 1, 0], &rest));
        let coeff_of = |c: &Combination| c.get(target).cloned().unwrap_or_else(Rational::zero);
        let mut other = Rational::zero();
        for (ms, c) in &lhs {
            if ms.as_slice() != target {
                other -= &scale * c * self.correlator(genus, ms);
            }
        }
        for (ms, c) in &self_term {
            if ms.as_slice() != target {
                other += c * self.correlator(genus, ms);
            }
        }
        let n = rest.len();
        for mask in 0..(1u32 << n) {
            let a: Vec<u32> = (0..n).filter(|p| mask & (1 << p) != 0).map(|p| rest[p]).collect();
            let b: Vec<u32> = (0..n).filter(|p| mask & (1 << p) == 0).map(|p| rest[p]).collect();
            for g1 in 0..=genus {
                let g2 = genus - g1;
                let skip_self = g1 == genus && b.is_empty();
                if !skip_self {
                    let right = self.correlator(g2, &with(&[0, 0, 0], &b));
                    if !right.is_zero() {
                        other += right * self.correlator(g1, &with(&[k + 1, 0], &a));
                    }
                }
                let right = self.correlator(g2, &with(&[0, 0], &b));
                if !right.is_zero() {
                    other += rat(2) * right * self.correlator(g1, &with(&[k + 1, 0, 0], &a));
                }
            }
        }
        if genus > 0 {
            other += Rational::new(BigInt::from(1), BigInt::from(4)) * self.correlator(genus - 1, &with(&[k + 1, 0, 0, 0, 0], &rest));
        }
        let denom = &scale * coeff_of(&lhs) - coeff_of(&self_term);
        other / denom
    }
}

/// All nonzero ⟨τ…⟩_g with 1 ≤ n ≤ n_max, as a store on a one-dimensional space.
pub fn tau_point(g_max: u32, n_max: usize) -> CorrelatorStore {
    let ring = Ring::constants(1);
    tau_store(&ring, g_max, n_max, &WittenKontsevich::new())
}

fn tau_store(ring: &Arc<Ring>, g_max: u32, n_max: usize, wk: &WittenKontsevich) -> CorrelatorStore {
    let bounds = Bounds::tame(g_max, n_max);
    let mut store = CorrelatorStore::new(ring, 1, bounds.clone());
    for g in 0..=g_max {
        for n in 1..=n_max {
            if !stable(g, n) {
                continue;
            }
            let dim = 3 * g as i64 - 3 + n as i64;
            for slots in label_multisets(n, 1, dim, bounds.psi) {
                let idx: Vec<u32> = slots.iter().map(|s| s.psi).collect();
                let v = wk.correlator(g, &idx);
                if !v.is_zero() {
                    store.insert(Key { genus: g, slots }, MultiSeries::from_rational(ring, v));
                }
            }
        }
    }
    store
}

/// 𝒯 = ∏_α τ(q^α) on V = C^{copies} with the identity pairing, expanded at q = −δz.
///
/// Single-copy entries are δ_α^{2−2g−n}⟨τ…⟩_g; `inverse_shift[α]` is δ_α⁻¹. The discriminant is
/// ∏_α (−q₁^α/δ_α), so that it equals 1 at q₁ = −δ.
pub fn tau_product(
    ring: &Arc<Ring>,
    shift: &[MultiSeries],
    inverse_shift: &[MultiSeries],
    bounds: Bounds,
) -> FockElement {
    let copies = shift.len();
    let wk = WittenKontsevich::new();
    let mut store = CorrelatorStore::new(ring, copies, bounds.clone());
    let mut powers: Vec<Vec<MultiSeries>> = Vec::new();
    let top = (0..=bounds.genus).map(|g| 2 * g as usize + bounds.insertions_at(g)).max().unwrap();
    for a in 0..copies {
        let mut p = vec![MultiSeries::one(ring)];
        for e in 1..=top {
            let next = p[e - 1].mul(&inverse_shift[a]);
            p.push(next);
        }
        powers.push(p);
    }
    for g in 0..=bounds.genus {
        for n in 1..=bounds.insertions_at(g) {
            if !stable(g, n) {
                continue;
            }
            let dim = 3 * g as i64 - 3 + n as i64;
            for slots in label_multisets(n, 1, dim, bounds.psi) {
                let idx: Vec<u32> = slots.iter().map(|s| s.psi).collect();
                let v = wk.correlator(g, &idx);
                if v.is_zero() {
                    continue;
                }
                let e = 2 * g as usize + n - 2;
                for a in 0..copies {
                    let key = Key::new(g, idx.iter().map(|&k| Slot::new(k, a)).collect());
                    store.insert(key, powers[a][e].scale_rational(&v));
                }
            }
        }
    }
    FockElement {
        store,
        shift: shift.to_vec(),
        pairing: Matrix::identity(ring, copies),
        rationality: Some(Rationality {
            weight: Rational::new(BigInt::from(-1), BigInt::from(24)),
            discriminant: Discriminant {
                factors: (0..copies)
                    .map(|a| {
                        (0..copies)
                            .map(|b| if a == b { inverse_shift[a].neg() } else { MultiSeries::zero(ring) })
                            .collect()
                    })
                    .collect(),
            },
        }),
    }
}

/// Residuals of the string and dilaton equations on a ψ-intersection store.
pub fn tau_string_dilaton_residuals(store: &CorrelatorStore) -> Result<(usize, usize), FockError> {
    let mut string_bad = 0;
    let mut dilaton_bad = 0;
    let inner = Bounds {
        insertions: store.bounds.insertions.iter().map(|&n| n.saturating_sub(1)).collect(),
        ..store.bounds.clone()
    };
    for key in tame_keys(&inner, store.dim) {
        let value = store.get(&key)?;
        let n = key.len();
        let with0 = key.with(&[Slot::new(0, 0)]);
        if with0.is_stable() && !(with0.genus == 0 && with0.len() == 3) {
            let lhs = store.get(&with0)?;
            let mut rhs = MultiSeries::zero(&store.ring);
            for j in 0..n {
                if key.slots[j].psi > 0 {
                    let mut s = key.slots.clone();
                    s[j].psi -= 1;
                    rhs = rhs.add(&store.get(&Key::new(key.genus, s))?);
                }
            }
            if !lhs.agrees_with(&rhs) {
                string_bad += 1;
            }
        }
        let with1 = key.with(&[Slot::new(1, 0)]);
        let lhs = store.get(&with1)?;
        let rhs = value.scale_rational(&rat(2 * key.genus as i64 - 2 + n as i64));
        if !lhs.agrees_with(&rhs) {
            dilaton_bad += 1;
        }
    }
    Ok((string_bad, dilaton_bad))
}

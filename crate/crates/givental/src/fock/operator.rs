//! Unitary operators, the symplectic form, propagators and the quantized action of a unitary
//! operator on Fock space elements as a sum over decorated stable graphs.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;

use super::graphs::{enumerate_stable_shapes, StableGraph};
use super::store::{tame_keys, Bounds, CorrelatorStore, FockElement, Key, Rationality, Slot};
use super::FockError;
use crate::series::{Matrix, MultiSeries, Rational, Ring};

/// A(z) = Σ_k A_k z^k from V (pairing `source_pairing`) to W (pairing `target_pairing`).
#[derive(Clone, Debug)]
pub struct UnitaryOp {
    pub source_pairing: Matrix,
    pub target_pairing: Matrix,
    pub coeffs: Vec<Matrix>,
    /// Highest known z-power; `None` when A is the polynomial given by `coeffs`.
    pub known_order: Option<usize>,
}

impl UnitaryOp {
    /// Coefficients known through z^{coeffs.len()−1}, unknown beyond.
    pub fn truncated(source_pairing: Matrix, target_pairing: Matrix, coeffs: Vec<Matrix>) -> Self {
        let known = coeffs.len() - 1;
        UnitaryOp { source_pairing, target_pairing, coeffs, known_order: Some(known) }
    }

    pub fn polynomial(source_pairing: Matrix, target_pairing: Matrix, coeffs: Vec<Matrix>) -> Self {
        UnitaryOp { source_pairing, target_pairing, coeffs, known_order: None }
    }

    pub fn identity(pairing: &Matrix) -> Self {
        let id = Matrix::identity(pairing.ring(), pairing.dim());
        Self::polynomial(pairing.clone(), pairing.clone(), vec![id])
    }

    pub fn ring(&self) -> &Arc<Ring> {
        self.coeffs[0].ring()
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].dim()
    }

    pub fn order(&self) -> usize {
        self.known_order.unwrap_or(usize::MAX)
    }

    pub fn coeff(&self, k: usize) -> Result<Matrix, FockError> {
        if k > self.order() {
            return Err(FockError::WindowTooSmall(format!("z^{k} of an operator known through z^{}", self.order())));
        }
        Ok(self.coeffs.get(k).cloned().unwrap_or_else(|| Matrix::zero(self.ring(), self.dim())))
    }

    /// (A†)_k = g_V⁻¹ A_kᵀ g_W.
    pub fn adjoint_coeff(&self, k: usize) -> Result<Matrix, FockError> {
        let gv_inv = self.source_pairing.try_inverse()?;
        Ok(gv_inv.mul(&self.coeff(k)?.transpose()).mul(&self.target_pairing))
    }

    /// Coefficients of A(z)⁻¹ through z^order.
    pub fn inverse_coeffs(&self, order: usize) -> Result<Vec<Matrix>, FockError> {
        let a0_inv = self.coeff(0)?.try_inverse()?;
        let mut out: Vec<Matrix> = vec![a0_inv.clone()];
        for k in 1..=order {
            let mut acc = Matrix::zero(self.ring(), self.dim());
            for j in 1..=k {
                acc = acc.add(&self.coeff(j)?.mul(&out[k - j]));
            }
            out.push(a0_inv.mul(&acc).neg());
        }
        Ok(out)
    }

    /// self ∘ inner.
    pub fn compose(&self, inner: &UnitaryOp) -> Result<UnitaryOp, FockError> {
        if self.dim() != inner.dim() {
            return Err(FockError::DimensionMismatch(format!("{} vs {}", self.dim(), inner.dim())));
        }
        if !self.source_pairing.agrees_with(&inner.target_pairing) {
            return Err(FockError::DimensionMismatch("pairings of the middle space differ".into()));
        }
        let known_order = match (self.known_order, inner.known_order) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or(usize::MAX).min(b.unwrap_or(usize::MAX))),
        };
        let len = match known_order {
            Some(k) => k + 1,
            None => self.coeffs.len() + inner.coeffs.len() - 1,
        };
        let mut coeffs = Vec::with_capacity(len);
        for k in 0..len {
            let mut acc = Matrix::zero(self.ring(), self.dim());
            for j in 0..=k {
                if j < self.coeffs.len() && k - j < inner.coeffs.len() {
                    acc = acc.add(&self.coeffs[j].mul(&inner.coeffs[k - j]));
                }
            }
            coeffs.push(acc);
        }
        Ok(UnitaryOp {
            source_pairing: inner.source_pairing.clone(),
            target_pairing: self.target_pairing.clone(),
            coeffs,
            known_order,
        })
    }

    /// The first k ≤ order at which Σ_a (−1)^a (A†)_a A_{k−a} differs from δ_{k0} Id.
    pub fn unitarity_defect(&self, order: usize) -> Result<Option<usize>, FockError> {
        let id = Matrix::identity(self.ring(), self.dim());
        for k in 0..=order {
            let mut acc = Matrix::zero(self.ring(), self.dim());
            for a in 0..=k {
                let term = self.adjoint_coeff(a)?.mul(&self.coeff(k - a)?);
                acc = if a % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            if k == 0 {
                acc = acc.sub(&id);
            }
            if !acc.is_zero() {
                return Ok(Some(k));
            }
        }
        Ok(None)
    }

    /// A(z) f(z) on the part of the window that is determined.
    pub fn apply(&self, f: &LaurentVector) -> Result<LaurentVector, FockError> {
        let complete = f.complete && self.known_order.is_none();
        let top = if complete {
            f.top() + self.coeffs.len() as i32 - 1
        } else {
            let mut top = if f.complete { i32::MAX } else { f.top() };
            if let Some(k) = self.known_order {
                top = top.min(f.lowest + k as i32);
            }
            top
        };
        let ring = self.ring();
        let mut coeffs = Vec::new();
        for k in f.lowest..=top {
            let mut acc = vec![MultiSeries::zero(ring); self.dim()];
            for j in 0..=(k - f.lowest) as usize {
                if j >= self.coeffs.len() {
                    break;
                }
                if let Some(v) = f.coeff(k - j as i32) {
                    let w = self.coeffs[j].apply(v);
                    for (x, y) in acc.iter_mut().zip(w) {
                        *x = x.add(&y);
                    }
                }
            }
            coeffs.push(acc);
        }
        Ok(LaurentVector { lowest: f.lowest, coeffs, complete })
    }
}

/// A vector-valued Laurent polynomial Σ_k f_k z^k over the window [lowest, lowest + len).
/// When `complete` is false the coefficients above the window are unknown.
#[derive(Clone, Debug)]
pub struct LaurentVector {
    pub lowest: i32,
    pub coeffs: Vec<Vec<MultiSeries>>,
    pub complete: bool,
}

impl LaurentVector {
    pub fn top(&self) -> i32 {
        self.lowest + self.coeffs.len() as i32 - 1
    }

    pub fn coeff(&self, k: i32) -> Option<&Vec<MultiSeries>> {
        if k < self.lowest {
            return None;
        }
        self.coeffs.get((k - self.lowest) as usize)
    }
}

/// Ω(f₁, f₂) = Res_{z=0} ⟨f₁(−z), f₂(z)⟩ dz = Σ_{a+b=−1} (−1)^a ⟨f₁,a, f₂,b⟩.
pub fn symplectic_form(f1: &LaurentVector, f2: &LaurentVector, pairing: &Matrix) -> Result<MultiSeries, FockError> {
    let needed1 = -1 - f2.lowest;
    let needed2 = -1 - f1.lowest;
    if (!f1.complete && f1.top() < needed1) || (!f2.complete && f2.top() < needed2) {
        return Err(FockError::WindowTooSmall("residue needs coefficients beyond the known window".into()));
    }
    let mut acc = MultiSeries::zero(pairing.ring());
    for a in f1.lowest..=f1.top() {
        let (Some(x), Some(y)) = (f1.coeff(a), f2.coeff(-1 - a)) else { continue };
        let gy = pairing.apply(y);
        let mut term = MultiSeries::zero(pairing.ring());
        for (u, v) in x.iter().zip(&gy) {
            term = term.add(&u.mul(v));
        }
        acc = if a.rem_euclid(2) == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    Ok(acc)
}

/// Δ^{(i,α),(j,β)} for i + j ≤ window, stored as `table[i][j]` with (α, β) entries.
/// When `complete` is true the entries beyond the window vanish.
#[derive(Clone, Debug)]
pub struct Propagator {
    pub window: usize,
    pub table: Vec<Vec<Matrix>>,
    pub complete: bool,
}

impl Propagator {
    pub fn zero(ring: &Arc<Ring>, dim: usize) -> Self {
        Propagator { window: 0, table: vec![vec![Matrix::zero(ring, dim)]], complete: true }
    }

    pub fn entry(&self, a: Slot, b: Slot) -> Result<Option<&MultiSeries>, FockError> {
        let (i, j) = (a.psi as usize, b.psi as usize);
        if i + j > self.window {
            if self.complete {
                return Ok(None);
            }
            return Err(FockError::WindowTooSmall(format!("propagator entry {a},{b}")));
        }
        Ok(Some(self.table[i][j].get(a.index, b.index)))
    }

    pub fn is_zero(&self) -> bool {
        self.table.iter().all(|row| row.iter().all(|m| m.is_zero()))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..=self.window).all(|i| (0..=self.window - i).all(|j| self.table[i][j].agrees_with(&self.table[j][i].transpose())))
    }
}

/// Expands (A†(w)A(z) − Id)/(z + w) = Σ P_ij w^i z^j and sets Δ^{(i,α),(j,β)} = (−1)^{i+j}(P_ij g_V⁻¹)_{αβ}.
pub fn propagator(op: &UnitaryOp, window: usize) -> Result<Propagator, FockError> {
    let ring = op.ring().clone();
    let dim = op.dim();
    let gv_inv = op.source_pairing.try_inverse()?;
    let adj: Vec<Matrix> = (0..=window + 1).map(|k| op.adjoint_coeff(k)).collect::<Result<_, _>>()?;
    let coeffs: Vec<Matrix> = (0..=window + 1).map(|k| op.coeff(k)).collect::<Result<_, _>>()?;
    let id = Matrix::identity(&ring, dim);
    let numerator = |a: usize, b: usize| {
        let m = adj[a].mul(&coeffs[b]);
        if a == 0 && b == 0 {
            m.sub(&id)
        } else {
            m
        }
    };
    if !numerator(0, 0).is_zero() {
        return Err(FockError::NotUnitary("A†A − Id does not vanish at z = w = 0".into()));
    }
    let mut quotient: Vec<Vec<Matrix>> = (0..=window).map(|i| Vec::with_capacity(window - i + 1)).collect();
    for total in 0..=window {
        for i in 0..=total {
            let j = total - i;
            let mut p = numerator(i, j + 1);
            if i > 0 {
                p = p.sub(&quotient[i - 1][j + 1]);
            }
            debug_assert_eq!(quotient[i].len(), j);
            quotient[i].push(p);
        }
    }
    for a in 1..=window + 1 {
        if !numerator(a, 0).agrees_with(&quotient[a - 1][0]) {
            return Err(FockError::NotUnitary(format!("z + w does not divide the w^{a} coefficient")));
        }
    }
    let table = quotient
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, p)| {
                    let m = p.mul(&gv_inv);
                    if (i + j) % 2 == 0 {
                        m
                    } else {
                        m.neg()
                    }
                })
                .collect()
        })
        .collect();
    Ok(Propagator { window, table, complete: false })
}

fn worker_count() -> usize {
    std::env::var("GIVENTAL_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Maps `f` over `items` on a pool of scoped threads; results keep the input order.
pub(crate) fn parallel_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = worker_count().min(items.len()).max(1);
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let chunks: Vec<Vec<(usize, R)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= items.len() {
                            break;
                        }
                        out.push((i, f(&items[i])));
                    }
                    out
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker thread panicked")).collect()
    });
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    for (i, r) in chunks.into_iter().flatten() {
        slots[i] = Some(r);
    }
    slots.into_iter().map(|r| r.expect("every item is mapped")).collect()
}

type GraphCache = Mutex<HashMap<(u32, usize), Arc<Vec<StableGraph>>>>;

fn graphs_for(genus: u32, legs: usize) -> Arc<Vec<StableGraph>> {
    static CACHE: OnceLock<GraphCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(g) = cache.lock().unwrap().get(&(genus, legs)) {
        return g.clone();
    }
    let graphs = Arc::new(enumerate_stable_shapes(genus, legs));
    cache.lock().unwrap().insert((genus, legs), graphs.clone());
    graphs
}

/// Largest 3g − 3 + n over the bounds: the z-order of A needed for quantization.
pub fn top_order(bounds: &Bounds) -> usize {
    (0..=bounds.genus)
        .filter(|&g| bounds.insertions_at(g) > 0)
        .map(|g| (3 * g as i64 - 3 + bounds.insertions_at(g) as i64).max(0) as usize)
        .max()
        .unwrap_or(0)
}

/// Vertex correlators needed by the graph sum: genus g_v with up to n_g + 2(g − g_v) insertions.
pub fn vertex_bounds(bounds: &Bounds) -> Bounds {
    let insertions = (0..=bounds.genus)
        .map(|gv| {
            (gv..=bounds.genus)
                .filter(|&g| bounds.insertions_at(g) > 0)
                .map(|g| bounds.insertions_at(g) + 2 * (g - gv) as usize)
                .max()
                .unwrap_or(0)
        })
        .collect();
    Bounds::per_genus(insertions)
}

/// Input window sufficient for `quantize` to produce `bounds`: re-centering a vertex entry of
/// genus g_v with m insertions reads entries with up to 2m + 3g_v − 3 insertions.
pub fn required_input_bounds(bounds: &Bounds) -> Bounds {
    let vb = vertex_bounds(bounds);
    let insertions = (0..=vb.genus)
        .map(|gv| {
            let m = vb.insertions_at(gv) as i64;
            m.max(2 * m + 3 * gv as i64 - 3) as usize
        })
        .collect();
    Bounds::per_genus(insertions)
}

fn factorial(n: usize) -> Rational {
    Rational::from_integer((1..=n).map(BigInt::from).product::<BigInt>().max(BigInt::from(1)))
}

/// Taylor shift y ↦ y + s where s has components only in ψ-degrees ≥ 2: `higher[j]` is s_{j+2}.
/// Returns the correlators of the shifted function within `bounds`.
pub fn recenter(store: &CorrelatorStore, higher: &[Vec<MultiSeries>], bounds: &Bounds) -> Result<CorrelatorStore, FockError> {
    let ring = store.ring.clone();
    let max_budget = (0..=bounds.genus)
        .map(|g| 3 * g as i64 - 3 + bounds.insertions_at(g) as i64)
        .max()
        .unwrap_or(0)
        .max(0) as usize;
    let mut directions: Vec<(Slot, MultiSeries)> = Vec::new();
    for (j, v) in higher.iter().enumerate() {
        if j + 1 > max_budget {
            break;
        }
        for (a, x) in v.iter().enumerate() {
            if !x.is_zero() {
                directions.push((Slot::new(j as u32 + 2, a), x.clone()));
            }
        }
    }
    if !directions.is_empty() && higher.len() < max_budget {
        return Err(FockError::WindowTooSmall(format!("shift known through ψ^{} only", higher.len() + 1)));
    }
    // monomials s^M / M! with weight Σ(ψ − 1)
    let mut monomials: Vec<(Vec<Slot>, usize, MultiSeries)> = Vec::new();
    fn grow(
        directions: &[(Slot, MultiSeries)],
        start: usize,
        budget: usize,
        current: &mut Vec<(usize, usize)>,
        out: &mut Vec<(Vec<usize>, Vec<usize>)>,
    ) {
        out.push((current.iter().map(|c| c.0).collect(), current.iter().map(|c| c.1).collect()));
        for d in start..directions.len() {
            let w = directions[d].0.psi as usize - 1;
            if w > budget {
                continue;
            }
            match current.last_mut() {
                Some(last) if last.0 == d => last.1 += 1,
                _ => current.push((d, 1)),
            }
            grow(directions, d, budget - w, current, out);
            let last = current.last_mut().unwrap();
            if last.1 == 1 {
                current.pop();
            } else {
                last.1 -= 1;
            }
        }
    }
    let mut raw = Vec::new();
    grow(&directions, 0, max_budget, &mut Vec::new(), &mut raw);
    for (dirs, counts) in raw {
        let mut slots = Vec::new();
        let mut weight = 0;
        let mut coeff = MultiSeries::one(&ring);
        let mut denom = Rational::from_integer(BigInt::from(1));
        for (&d, &c) in dirs.iter().zip(&counts) {
            let (slot, value) = &directions[d];
            for _ in 0..c {
                slots.push(*slot);
                coeff = coeff.mul(value);
                weight += slot.psi as usize - 1;
            }
            denom *= factorial(c);
        }
        monomials.push((slots, weight, coeff.scale_rational(&(Rational::from_integer(BigInt::from(1)) / denom))));
    }
    monomials.sort_by_key(|m| m.1);
    let keys = tame_keys(bounds, store.dim);
    let values = parallel_map(&keys, |key| -> Result<MultiSeries, FockError> {
        let budget = (key.dimension() - key.psi_total() as i64).max(0) as usize;
        let mut acc = MultiSeries::zero(&ring);
        for (slots, weight, coeff) in &monomials {
            if *weight > budget {
                break;
            }
            let v = store.get(&key.with(slots))?;
            if !v.is_zero() {
                acc = acc.add(&v.mul(coeff));
            }
        }
        Ok(acc)
    });
    let mut out = CorrelatorStore::new(&ring, store.dim, bounds.clone());
    for (key, value) in keys.into_iter().zip(values) {
        out.insert(key, value?);
    }
    Ok(out)
}

fn distinct_permutations(sorted: &[Slot]) -> Vec<Vec<Slot>> {
    let mut cur = sorted.to_vec();
    let mut out = vec![cur.clone()];
    let n = cur.len();
    if n < 2 {
        return out;
    }
    loop {
        let mut i = n - 1;
        while i > 0 && cur[i - 1] >= cur[i] {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        let mut j = n - 1;
        while cur[j] <= cur[i - 1] {
            j -= 1;
        }
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

fn multiset_minus(big: &[Slot], small: &[Slot]) -> Option<Vec<Slot>> {
    let mut rest = Vec::with_capacity(big.len());
    let mut j = 0;
    for &s in big {
        if j < small.len() && small[j] == s {
            j += 1;
        } else {
            rest.push(s);
        }
    }
    (j == small.len()).then_some(rest)
}

type Candidates = Arc<Vec<(Vec<Slot>, MultiSeries)>>;

struct VertexIndex {
    by_shape: HashMap<(u32, usize), Vec<(Vec<Slot>, MultiSeries)>>,
}

impl VertexIndex {
    fn new(store: &CorrelatorStore) -> Self {
        let mut by_shape: HashMap<(u32, usize), Vec<(Vec<Slot>, MultiSeries)>> = HashMap::new();
        for (k, v) in store.entries() {
            by_shape.entry((k.genus, k.len())).or_default().push((k.slots.clone(), v.clone()));
        }
        VertexIndex { by_shape }
    }

    /// Half-edge labelings (in port order) of a vertex whose legs carry `legs`.
    fn candidates(&self, genus: u32, legs: &[Slot], halves: usize, psi_max: u32) -> Vec<(Vec<Slot>, MultiSeries)> {
        let mut out = Vec::new();
        let Some(entries) = self.by_shape.get(&(genus, legs.len() + halves)) else { return out };
        for (slots, value) in entries {
            let Some(rest) = multiset_minus(slots, legs) else { continue };
            if rest.iter().any(|s| s.psi > psi_max) {
                continue;
            }
            for p in distinct_permutations(&rest) {
                out.push((p, value.clone()));
            }
        }
        out
    }
}

struct Decoration<'a> {
    halves: Vec<Vec<(usize, usize)>>,
    completes: Vec<Vec<usize>>,
    lists: Vec<Candidates>,
    propagator: &'a Propagator,
    labels: Vec<[Slot; 2]>,
}

impl Decoration<'_> {
    fn run(&mut self, v: usize, acc: &MultiSeries, total: &mut MultiSeries) -> Result<(), FockError> {
        if v == self.lists.len() {
            *total = total.add(acc);
            return Ok(());
        }
        let list = self.lists[v].clone();
        'next: for (labels, value) in list.iter() {
            for (p, &(e, end)) in self.halves[v].iter().enumerate() {
                self.labels[e][end] = labels[p];
            }
            let mut w = acc.mul(value);
            for &e in &self.completes[v] {
                let [a, b] = self.labels[e];
                match self.propagator.entry(a, b)? {
                    Some(d) if !d.is_zero() => w = w.mul(d),
                    _ => continue 'next,
                }
            }
            self.run(v + 1, &w, total)?;
        }
        Ok(())
    }
}

fn multiplicity_factorials(slots: &[Slot]) -> BigInt {
    let mut out = BigInt::from(1);
    let mut run = 0usize;
    for (i, s) in slots.iter().enumerate() {
        run = if i > 0 && slots[i - 1] == *s { run + 1 } else { 1 };
        out *= BigInt::from(run);
    }
    out
}

/// All ways to split the sorted multiset `pool` into sorted sub-multisets of the given sizes.
fn distributions(pool: &[Slot], sizes: &[usize]) -> Vec<Vec<Vec<Slot>>> {
    fn rec(pool: &[Slot], sizes: &[usize], out: &mut Vec<Vec<Vec<Slot>>>, cur: &mut Vec<Vec<Slot>>) {
        let Some((&size, rest_sizes)) = sizes.split_first() else {
            out.push(cur.clone());
            return;
        };
        let mut distinct: Vec<(Slot, usize)> = Vec::new();
        for &s in pool {
            match distinct.last_mut() {
                Some((t, c)) if *t == s => *c += 1,
                _ => distinct.push((s, 1)),
            }
        }
        let mut chosen = vec![0usize; distinct.len()];
        fn pick(
            i: usize,
            left: usize,
            distinct: &[(Slot, usize)],
            chosen: &mut Vec<usize>,
            emit: &mut dyn FnMut(&[usize]),
        ) {
            if i == distinct.len() {
                if left == 0 {
                    emit(chosen);
                }
                return;
            }
            for c in 0..=distinct[i].1.min(left) {
                chosen[i] = c;
                pick(i + 1, left - c, distinct, chosen, emit);
            }
            chosen[i] = 0;
        }
        let mut picks: Vec<Vec<usize>> = Vec::new();
        pick(0, size, &distinct, &mut chosen, &mut |c| picks.push(c.to_vec()));
        for c in picks {
            let mut taken = Vec::new();
            let mut remaining = Vec::new();
            for (i, &(s, count)) in distinct.iter().enumerate() {
                for _ in 0..c[i] {
                    taken.push(s);
                }
                for _ in c[i]..count {
                    remaining.push(s);
                }
            }
            cur.push(taken);
            rec(&remaining, rest_sizes, out, cur);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(pool, sizes, &mut out, &mut Vec::new());
    out
}

/// Contribution of one stable shape (unnumbered legs) to the correlator of `key`:
/// Σ over distributions of the leg labels to vertices, weighted by
/// ∏ mult_K! / ∏_v ∏ mult_{L_v}!, of the half-edge decorations, divided by |Aut|.
fn graph_contribution(
    graph: &StableGraph,
    key: &Key,
    index: &VertexIndex,
    propagator: &Propagator,
    cache: &mut HashMap<(u32, Vec<Slot>, usize), Candidates>,
) -> Result<MultiSeries, FockError> {
    let ring = propagator.table[0][0].ring().clone();
    let nv = graph.num_vertices();
    let mut halves = vec![Vec::new(); nv];
    let mut completes = vec![Vec::new(); nv];
    for (e, &(a, b)) in graph.edges.iter().enumerate() {
        halves[a].push((e, 0));
        halves[b].push((e, 1));
        completes[a.max(b)].push(e);
    }
    let psi_max = propagator.window as u32;
    let key_weight = multiplicity_factorials(&key.slots);
    let mut total = MultiSeries::zero(&ring);
    'split: for split in distributions(&key.slots, &graph.leg_counts()) {
        let mut lists = Vec::with_capacity(nv);
        let mut denom = BigInt::from(1);
        for (v, legs) in split.into_iter().enumerate() {
            denom *= multiplicity_factorials(&legs);
            let id = (graph.genera[v], legs, halves[v].len());
            let list = match cache.get(&id) {
                Some(l) => l.clone(),
                None => {
                    let l: Candidates = Arc::new(index.candidates(id.0, &id.1, id.2, psi_max));
                    cache.insert(id, l.clone());
                    l
                }
            };
            if list.is_empty() {
                continue 'split;
            }
            lists.push(list);
        }
        let mut search = Decoration {
            halves: halves.clone(),
            completes: completes.clone(),
            lists,
            propagator,
            labels: vec![[Slot::new(0, 0); 2]; graph.edges.len()],
        };
        let mut sum = MultiSeries::zero(&ring);
        search.run(0, &MultiSeries::one(&ring), &mut sum)?;
        if !sum.is_zero() {
            total = total.add(&sum.scale_rational(&Rational::new(key_weight.clone(), denom)));
        }
    }
    Ok(total.scale_rational(&Rational::new(BigInt::from(1), BigInt::from(graph.automorphisms))))
}

/// Correlators of log(exp(½ΣΔ^{ab}∂_a∂_b) exp(Σ F^g)) within `bounds`: for each key, the sum over
/// connected stable graphs whose legs carry the key's labels, half-edges decorated in all ways,
/// of ∏ vertex correlators · ∏ edge propagators / |Aut|.
pub fn feynman_sum(vertices: &CorrelatorStore, propagator: &Propagator, bounds: &Bounds) -> Result<CorrelatorStore, FockError> {
    let ring = vertices.ring.clone();
    let keys = tame_keys(bounds, vertices.dim);
    let mut out = CorrelatorStore::new(&ring, vertices.dim, bounds.clone());
    if propagator.is_zero() {
        for key in keys {
            let v = vertices.get(&key)?;
            out.insert(key, v);
        }
        return Ok(out);
    }
    let vb = vertex_bounds(bounds);
    if !vertices.bounds.covers(&vb) {
        return Err(FockError::BoundsExceeded(format!("vertex data needs insertions {:?}", vb.insertions)));
    }
    for g in 0..=bounds.genus {
        for n in 1..=bounds.insertions_at(g) {
            graphs_for(g, n);
        }
    }
    let index = VertexIndex::new(vertices);
    let values = parallel_map(&keys, |key| -> Result<MultiSeries, FockError> {
        let mut cache = HashMap::new();
        let mut acc = MultiSeries::zero(&ring);
        for graph in graphs_for(key.genus, key.len()).iter() {
            let c = graph_contribution(graph, key, &index, propagator, &mut cache)?;
            acc = acc.add(&c);
        }
        Ok(acc)
    });
    for (key, value) in keys.into_iter().zip(values) {
        out.insert(key, value?);
    }
    Ok(out)
}

/// Substitution y_V = A⁻¹(z) y_W on every insertion slot:
/// C_W[(l₁,α₁)…] = Σ ∏_r ((A⁻¹)_{k_r−l_r})_{β_r α_r} C_V[(k₁,β₁)…].
pub fn transform_slots(store: &CorrelatorStore, inverse: &[Matrix], bounds: &Bounds) -> Result<CorrelatorStore, FockError> {
    let ring = store.ring.clone();
    let dim = store.dim;
    let keys = tame_keys(bounds, dim);
    let values = parallel_map(&keys, |key| -> Result<MultiSeries, FockError> {
        let slack = (key.dimension() - key.psi_total() as i64).max(0) as usize;
        let mut acc = MultiSeries::zero(&ring);
        let mut chosen: Vec<Slot> = Vec::with_capacity(key.len());
        #[allow(clippy::too_many_arguments)]
        fn rec(
            r: usize,
            slack: usize,
            key: &Key,
            inverse: &[Matrix],
            store: &CorrelatorStore,
            chosen: &mut Vec<Slot>,
            weight: &MultiSeries,
            acc: &mut MultiSeries,
        ) -> Result<(), FockError> {
            if r == key.len() {
                let v = store.get(&Key::new(key.genus, chosen.clone()))?;
                if !v.is_zero() {
                    *acc = acc.add(&v.mul(weight));
                }
                return Ok(());
            }
            let target = key.slots[r];
            for step in 0..=slack {
                if step >= inverse.len() {
                    return Err(FockError::WindowTooSmall(format!("A⁻¹ known through z^{}", inverse.len() - 1)));
                }
                for beta in 0..store.dim {
                    let c = inverse[step].get(beta, target.index);
                    if c.is_zero() {
                        continue;
                    }
                    chosen.push(Slot::new(target.psi + step as u32, beta));
                    rec(r + 1, slack - step, key, inverse, store, chosen, &weight.mul(c), acc)?;
                    chosen.pop();
                }
            }
            Ok(())
        }
        rec(0, slack, key, inverse, store, &mut chosen, &MultiSeries::one(&ring), &mut acc)?;
        Ok(acc)
    });
    let mut out = CorrelatorStore::new(&ring, dim, bounds.clone());
    for (key, value) in keys.into_iter().zip(values) {
        out.insert(key, value?);
    }
    Ok(out)
}

/// Â e ∈ Fock(W, A₀δ) within `bounds`.
pub fn quantize(op: &UnitaryOp, e: &FockElement, bounds: &Bounds) -> Result<FockElement, FockError> {
    if op.dim() != e.dim() {
        return Err(FockError::DimensionMismatch(format!("operator {} vs element {}", op.dim(), e.dim())));
    }
    if !op.source_pairing.agrees_with(&e.pairing) {
        return Err(FockError::DimensionMismatch("operator source pairing differs from the element's".into()));
    }
    let top = top_order(bounds);
    let inverse = op.inverse_coeffs(top)?;
    let prop = if top == 0 { Propagator::zero(op.ring(), op.dim()) } else { propagator(op, top - 1)? };
    let a0 = op.coeff(0)?;
    let shift = a0.apply(&e.shift);
    let higher: Vec<Vec<MultiSeries>> =
        (1..=top).map(|k| inverse[k].apply(&shift).into_iter().map(|x| x.neg()).collect()).collect();
    let vertex_window = if prop.is_zero() { bounds.clone() } else { vertex_bounds(bounds) };
    let vertices = recenter(&e.store, &higher, &vertex_window)?;
    let summed = feynman_sum(&vertices, &prop, bounds)?;
    let store = transform_slots(&summed, &inverse, bounds)?;
    if !store.is_tame() {
        return Err(FockError::NotTame);
    }
    let rationality = e.rationality.as_ref().map(|r| Rationality {
        weight: r.weight.clone(),
        discriminant: r.discriminant.pull_back(&inverse[0]),
    });
    Ok(FockElement { store, shift, pairing: op.target_pairing.clone(), rationality })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::random::{random_matrix, random_unitary};
    use crate::fock::tau::tau_product;
    use crate::series::{Ring, Variable};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn constant(ring: &Arc<Ring>, r: Rational) -> MultiSeries {
        MultiSeries::from_rational(ring, r)
    }

    fn basis_vector(ring: &Arc<Ring>, dim: usize, lowest: i32, power: i32, index: usize) -> LaurentVector {
        let mut coeffs = vec![vec![MultiSeries::zero(ring); dim]; (power - lowest + 1) as usize];
        coeffs[(power - lowest) as usize][index] = MultiSeries::one(ring);
        LaurentVector { lowest, coeffs, complete: true }
    }

    fn random_vector(ring: &Arc<Ring>, dim: usize, lowest: i32, len: usize, rng: &mut ChaCha8Rng) -> LaurentVector {
        let coeffs = (0..len)
            .map(|_| (0..dim).map(|_| MultiSeries::from_int(ring, rng.gen_range(-5..6))).collect())
            .collect();
        LaurentVector { lowest, coeffs, complete: true }
    }

    #[test]
    fn symplectic_form_on_basis_vectors() {
        let ring = Ring::constants(1);
        let g = Matrix::from_rationals(&ring, &[vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]]);
        let g_inv = g.try_inverse().unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let f1 = basis_vector(&ring, 2, 0, 0, a);
                // φ^b = Σ g^{bc} φ_c
                let mut f2 = basis_vector(&ring, 2, -1, -1, 0);
                f2.coeffs[0] = g_inv.column(b);
                let value = symplectic_form(&f1, &f2, &g).unwrap();
                assert_eq!(value, MultiSeries::from_int(&ring, (a == b) as i64));
            }
        }
    }

    #[test]
    fn symplectic_form_is_antisymmetric() {
        let ring = Ring::constants(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Matrix::identity(&ring, 3);
        for _ in 0..10 {
            let f = random_vector(&ring, 3, -3, 6, &mut rng);
            let h = random_vector(&ring, 3, -2, 5, &mut rng);
            let a = symplectic_form(&f, &h, &g).unwrap();
            let b = symplectic_form(&h, &f, &g).unwrap();
            assert_eq!(a, b.neg());
        }
    }

    #[test]
    fn truncated_window_is_reported() {
        let ring = Ring::constants(1);
        let g = Matrix::identity(&ring, 1);
        let f = LaurentVector { lowest: -3, coeffs: vec![vec![MultiSeries::one(&ring)]], complete: true };
        let h = LaurentVector { lowest: 0, coeffs: vec![vec![MultiSeries::one(&ring)]], complete: false };
        assert!(matches!(symplectic_form(&f, &h, &g), Err(FockError::WindowTooSmall(_))));
    }

    #[test]
    fn unitary_operators_preserve_the_symplectic_form() {
        let ring = Ring::constants(1);
        let a = random_unitary(&ring, 2, 6, 11);
        assert_eq!(a.unitarity_defect(6).unwrap(), None);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = Matrix::identity(&ring, 2);
        for _ in 0..5 {
            let f = random_vector(&ring, 2, -3, 3, &mut rng);
            let h = random_vector(&ring, 2, -3, 3, &mut rng);
            let before = symplectic_form(&f, &h, &g).unwrap();
            let after = symplectic_form(&a.apply(&f).unwrap(), &a.apply(&h).unwrap(), &g).unwrap();
            assert_eq!(before, after);
        }
    }

    #[test]
    fn identity_has_zero_propagator() {
        let ring = Ring::constants(1);
        let id = UnitaryOp::identity(&Matrix::identity(&ring, 3));
        let p = propagator(&id, 5).unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn random_unitary_propagator_is_symmetric() {
        let ring = Ring::constants(1);
        let a = random_unitary(&ring, 3, 7, 21);
        let p = propagator(&a, 6).unwrap();
        assert!(p.is_symmetric());
        assert!(!p.is_zero());
    }

    #[test]
    fn non_unitary_operator_is_rejected() {
        let ring = Ring::constants(1);
        let mut a = random_unitary(&ring, 2, 5, 8);
        let bump = a.coeffs[2].add(&Matrix::identity(&ring, 2));
        a.coeffs[2] = bump;
        assert!(matches!(propagator(&a, 4), Err(FockError::NotUnitary(_))));
    }

    #[test]
    fn p1_propagator_starts_with_first_r_coefficient() {
        use crate::frobenius::{canonical_frame, FrobeniusSpec, QuantumAlgebra};
        use crate::rmatrix::solve_r;
        let spec = FrobeniusSpec::shipped("p1").unwrap();
        let ring = spec.ring(&q(4, 1)).unwrap();
        let alg = QuantumAlgebra::new(&spec, &ring).unwrap();
        let frame = canonical_frame(&alg).unwrap();
        let r = solve_r(&frame, &alg, 4).unwrap();
        let id = Matrix::identity(&ring, 2);
        let op = UnitaryOp::truncated(id.clone(), id, r.coeffs.clone());
        let p = propagator(&op, 2).unwrap();
        assert!(p.table[0][0].agrees_with(&r.coeffs[1]));
        assert!(p.is_symmetric());
    }

    fn tau_at(ring: &Arc<Ring>, shift: &[i64], bounds: Bounds) -> FockElement {
        let s: Vec<MultiSeries> = shift.iter().map(|&x| MultiSeries::from_int(ring, x)).collect();
        let inv: Vec<MultiSeries> = shift.iter().map(|&x| constant(ring, q(1, x))).collect();
        tau_product(ring, &s, &inv, bounds)
    }

    #[test]
    fn quantized_identity_is_the_identity() {
        let ring = Ring::constants(1);
        let e = tau_at(&ring, &[1, 2], Bounds::tame(2, 3));
        let id = UnitaryOp::identity(&e.pairing);
        let out = quantize(&id, &e, &Bounds::tame(2, 3)).unwrap();
        assert_eq!(out.store.entries(), e.store.entries());
        assert_eq!(out.shift, e.shift);
    }

    #[test]
    fn output_bounds_beyond_input_are_reported() {
        let ring = Ring::constants(1);
        let e = tau_at(&ring, &[1, 1], Bounds::tame(1, 3));
        let a = random_unitary(&ring, 2, 6, 2);
        assert!(matches!(quantize(&a, &e, &Bounds::tame(1, 3)), Err(FockError::BoundsExceeded(_))));
    }

    /// Taylor coefficients of ∂_a G · ∂_b H at the origin for a key K, by the Leibniz rule.
    fn product_term(
        left: &dyn Fn(&Key) -> MultiSeries,
        right: &dyn Fn(&Key) -> MultiSeries,
        a: Slot,
        b: Slot,
        key: &Key,
        genera: (u32, u32),
    ) -> MultiSeries {
        let ring = left(&Key::new(0, vec![])).ring().clone();
        let mut distinct: Vec<(Slot, usize)> = Vec::new();
        for &s in &key.slots {
            match distinct.last_mut() {
                Some((t, c)) if *t == s => *c += 1,
                _ => distinct.push((s, 1)),
            }
        }
        let mut acc = MultiSeries::zero(&ring);
        let mut split = vec![0usize; distinct.len()];
        loop {
            let mut first = vec![a];
            let mut second = vec![b];
            let mut weight = BigInt::from(1);
            for (i, &(s, c)) in distinct.iter().enumerate() {
                for _ in 0..split[i] {
                    first.push(s);
                }
                for _ in split[i]..c {
                    second.push(s);
                }
                weight *= num_integer::binomial(BigInt::from(c), BigInt::from(split[i]));
            }
            let x = left(&Key::new(genera.0, first));
            let y = right(&Key::new(genera.1, second));
            if !x.is_zero() && !y.is_zero() {
                acc = acc.add(&x.mul(&y).scale_rational(&Rational::from_integer(weight)));
            }
            let mut i = 0;
            loop {
                if i == split.len() {
                    return acc;
                }
                if split[i] < distinct[i].1 {
                    split[i] += 1;
                    break;
                }
                split[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn graph_sum_solves_the_heat_equation() {
        // Δ ↦ εΔ: (e+1)G^g_(e+1) = ½ΣΔ^{ab}(∂_a∂_b G^{g−1}_(e) + Σ ∂_a G^{g₁}_(e₁) ∂_b G^{g₂}_(e₂))
        let eps = Variable { name: "eps".into(), weight: q(1, 1), euler_weight: q(0, 1) };
        let ring = Ring::new(1, 1, vec![eps], q(20, 1)).unwrap();
        let bounds = Bounds::per_genus(vec![5, 3, 1]);
        let e = tau_at(&ring, &[1, 2], vertex_bounds(&bounds));
        let dim = 2;
        let window = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let eps_var = MultiSeries::variable(&ring, 0);
        let mut plain: Vec<Vec<Matrix>> = (0..=window).map(|i| vec![Matrix::zero(&ring, dim); window - i + 1]).collect();
        for i in 0..=window {
            for j in i..=window - i {
                plain[i][j] = random_matrix(&ring, dim, &mut rng, if i == j { Some(true) } else { None });
            }
            for j in 0..i.min(window - i + 1) {
                plain[i][j] = plain[j][i].transpose();
            }
        }
        let table = plain.iter().map(|row| row.iter().map(|m| m.map(|x| x.mul(&eps_var))).collect()).collect();
        let prop = Propagator { window, table, complete: true };
        assert!(prop.is_symmetric());
        let summed = feynman_sum(&e.store, &prop, &bounds).unwrap();

        let max_edges = 6;
        // layers[e] holds G_(e) on the vertex window; layer 0 is the vertex data
        let window_bounds = vertex_bounds(&bounds);
        let mut layers: Vec<HashMap<Key, MultiSeries>> = vec![e.store.entries().iter().map(|(k, v)| (k.clone(), v.clone())).collect()];
        let plain_delta = |a: Slot, b: Slot| -> MultiSeries {
            if (a.psi + b.psi) as usize > window {
                return MultiSeries::zero(&ring);
            }
            plain[a.psi as usize][b.psi as usize].get(a.index, b.index).clone()
        };
        let mut labels = Vec::new();
        for psi in 0..=window as u32 {
            for idx in 0..dim {
                labels.push(Slot::new(psi, idx));
            }
        }
        for step in 0..max_edges {
            let mut next = HashMap::new();
            for key in tame_keys(&window_bounds, dim) {
                let mut acc = MultiSeries::zero(&ring);
                for &a in &labels {
                    for &b in &labels {
                        let d = plain_delta(a, b);
                        if d.is_zero() {
                            continue;
                        }
                        let mut inner = MultiSeries::zero(&ring);
                        if key.genus > 0 {
                            let k2 = Key::new(key.genus - 1, key.with(&[a, b]).slots);
                            if k2.is_tame() && window_bounds.contains(&k2) {
                                inner = inner.add(layers[step].get(&k2).unwrap_or(&MultiSeries::zero(&ring)));
                            }
                        }
                        for g1 in 0..=key.genus {
                            for e1 in 0..=step {
                                let left = |k: &Key| -> MultiSeries {
                                    if !k.is_tame() || !k.is_stable() {
                                        return MultiSeries::zero(&ring);
                                    }
                                    layers[e1].get(k).cloned().unwrap_or_else(|| MultiSeries::zero(&ring))
                                };
                                let right = |k: &Key| -> MultiSeries {
                                    if !k.is_tame() || !k.is_stable() {
                                        return MultiSeries::zero(&ring);
                                    }
                                    layers[step - e1].get(k).cloned().unwrap_or_else(|| MultiSeries::zero(&ring))
                                };
                                inner = inner.add(&product_term(&left, &right, a, b, &key, (g1, key.genus - g1)));
                            }
                        }
                        acc = acc.add(&inner.mul(&d));
                    }
                }
                let value = acc.scale_rational(&q(1, 2 * (step as i64 + 1)));
                if !value.is_zero() {
                    next.insert(key, value);
                }
            }
            layers.push(next);
        }
        for key in tame_keys(&bounds, dim) {
            let mut expected = MultiSeries::zero(&ring);
            for (step, layer) in layers.iter().enumerate() {
                if let Some(v) = layer.get(&key) {
                    expected = expected.add(&v.mul(&eps_var.pow(step as u32)));
                }
            }
            let got = summed.get(&key).unwrap();
            assert!(got.agrees_with(&expected), "{key}: {got:?} vs {expected:?}");
        }
    }

    #[test]
    fn quantization_is_compatible_with_composition_in_rank_one() {
        let ring = Ring::constants(1);
        let a = random_unitary(&ring, 1, 8, 31);
        let b = random_unitary(&ring, 1, 8, 32);
        let out = Bounds::per_genus(vec![3, 1, 1]);
        let middle = required_input_bounds(&out);
        let e = tau_at(&ring, &[1], required_input_bounds(&middle));
        let stepwise = quantize(&b, &quantize(&a, &e, &middle).unwrap(), &out).unwrap();
        let direct = quantize(&b.compose(&a).unwrap(), &e, &out).unwrap();
        assert!(stepwise.store.differences(&direct.store, &out).is_empty());
        assert_eq!(stepwise.shift, direct.shift);
        assert!(stepwise.store.len() > 3);
    }

    #[test]
    fn quantization_is_compatible_with_composition_in_rank_two() {
        let ring = Ring::constants(1);
        let a = random_unitary(&ring, 2, 6, 41);
        let b = random_unitary(&ring, 2, 6, 42);
        let out = Bounds::per_genus(vec![3, 2]);
        let middle = required_input_bounds(&out);
        let e = tau_at(&ring, &[1, 3], required_input_bounds(&middle));
        let stepwise = quantize(&b, &quantize(&a, &e, &middle).unwrap(), &out).unwrap();
        let direct = quantize(&b.compose(&a).unwrap(), &e, &out).unwrap();
        assert!(stepwise.store.differences(&direct.store, &out).is_empty());
        assert_eq!(stepwise.shift, direct.shift);
    }

    #[test]
    fn discriminant_is_transported_by_the_constant_term() {
        let ring = Ring::constants(1);
        let e = tau_at(&ring, &[1, 1], Bounds::tame(1, 6));
        let a = random_unitary(&ring, 2, 4, 5);
        let out = quantize(&a, &e, &Bounds::tame(1, 1)).unwrap();
        assert!(out.rationality_normalized());
        let r = out.rationality.unwrap();
        assert_eq!(r.weight, q(-1, 24));
    }
}

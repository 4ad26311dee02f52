//! Reference values computed without the library: Witten–Kontsevich numbers by the DVV
//! recursion, Kontsevich's rational curve counts, Getzler's elliptic counts for P2, genus-zero
//! descendants of P1 and P2 from the string, divisor and topological recursion relations, tree
//! level ancestors, and a direct-sum Hilbert norm.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).map(BigInt::from).product()
}

pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    factorial(n as u64) / (factorial(k as u64) * factorial((n - k) as u64))
}

fn double_factorial(n: i64) -> BigInt {
    let mut acc = BigInt::one();
    let mut k = n;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    acc
}

/// ⟨τ_{d_1}⋯τ_{d_n}⟩_g on the moduli of stable curves.
#[derive(Default)]
pub struct Intersections {
    memo: HashMap<(u32, Vec<u32>), Q>,
}

impl Intersections {
    pub fn get(&mut self, genus: u32, psi: &[u32]) -> Q {
        let mut key = psi.to_vec();
        key.sort_unstable();
        let n = key.len() as i64;
        let g = genus as i64;
        if 2 * g - 2 + n <= 0 || key.iter().map(|&d| d as i64).sum::<i64>() != 3 * g - 3 + n {
            return Q::zero();
        }
        if let Some(v) = self.memo.get(&(genus, key.clone())) {
            return v.clone();
        }
        let v = self.compute(genus, &key);
        self.memo.insert((genus, key), v.clone());
        v
    }

    fn compute(&mut self, genus: u32, key: &[u32]) -> Q {
        if genus == 0 && key == [0, 0, 0] {
            return Q::one();
        }
        if genus == 1 && key == [1] {
            return Q::new(BigInt::one(), BigInt::from(24));
        }
        if key[0] == 0 {
            let rest = &key[1..];
            let mut total = Q::zero();
            for j in 0..rest.len() {
                if rest[j] > 0 {
                    let mut lowered = rest.to_vec();
                    lowered[j] -= 1;
                    total += self.get(genus, &lowered);
                }
            }
            return total;
        }
        let top = *key.last().unwrap();
        let k = top as i64 - 1;
        let rest = &key[..key.len() - 1];
        let mut total = Q::zero();
        for j in 0..rest.len() {
            let dj = rest[j] as i64;
            let coeff = Q::new(double_factorial(2 * k + 2 * dj + 1), double_factorial(2 * dj - 1));
            let mut merged = rest.to_vec();
            merged[j] = (dj + k) as u32;
            total += coeff * self.get(genus, &merged);
        }
        for a in 0..k {
            let b = k - 1 - a;
            let weight = Q::from_integer(double_factorial(2 * a + 1) * double_factorial(2 * b + 1)) / int(2);
            if genus > 0 {
                let mut extended = rest.to_vec();
                extended.extend([a as u32, b as u32]);
                total += &weight * self.get(genus - 1, &extended);
            }
            for mask in 0u32..(1 << rest.len()) {
                for g1 in 0..=genus {
                    let mut left = vec![a as u32];
                    let mut right = vec![b as u32];
                    for (i, &d) in rest.iter().enumerate() {
                        if mask & (1 << i) != 0 {
                            left.push(d);
                        } else {
                            right.push(d);
                        }
                    }
                    total += &weight * self.get(g1, &left) * self.get(genus - g1, &right);
                }
            }
        }
        total / Q::from_integer(double_factorial(2 * k + 3))
    }
}

/// N_d, the number of rational plane curves of degree d through 3d − 1 points, for d ≤ `max`.
/// Index 0 is unused.
pub fn kontsevich(max: usize) -> Vec<BigInt> {
    let mut n = vec![BigInt::zero(); max + 1];
    if max >= 1 {
        n[1] = BigInt::one();
    }
    for d in 2..=max as i64 {
        let mut acc = BigInt::zero();
        for d1 in 1..d {
            let d2 = d - d1;
            let left = BigInt::from(d1 * d1 * d2 * d2) * binomial(3 * d - 4, 3 * d1 - 2);
            let right = BigInt::from(d1 * d1 * d1 * d2) * binomial(3 * d - 4, 3 * d1 - 1);
            acc += &n[d1 as usize] * &n[d2 as usize] * (left - right);
        }
        n[d as usize] = acc;
    }
    n
}

/// Genus-one degree-d invariants of P2 with 3d point insertions, for d ≤ `max`.
pub fn getzler_elliptic(max: usize) -> Vec<Q> {
    let n = kontsevich(max);
    let mut e = vec![Q::zero(); max + 1];
    for d in 1..=max as i64 {
        let mut acc = Q::from_integer(binomial(d, 3) * &n[d as usize]) / int(12);
        for d1 in 1..d {
            let d2 = d - d1;
            let c = Q::from_integer(binomial(3 * d - 1, 3 * d1 - 1) * BigInt::from(d1 * (3 * d1 - 2) * d2)) / int(9);
            acc += c * Q::from_integer(n[d1 as usize].clone()) * &e[d2 as usize];
        }
        e[d as usize] = acc;
    }
    e
}

/// A descendant insertion τ_psi(H^class).
pub type Insertion = (u32, usize);

/// Genus-zero Gromov–Witten theory of a projective space P^dim with d ≤ 1 for dim 1 and
/// primary point invariants from [`kontsevich`] for dim 2, all evaluated at t = 0.
pub struct ProjectiveSpace {
    pub dim: usize,
    points: Vec<BigInt>,
    memo: HashMap<(u32, Vec<Insertion>), Q>,
}

impl ProjectiveSpace {
    pub fn new(dim: usize, max_degree: usize) -> Self {
        assert!(dim == 1 || dim == 2);
        ProjectiveSpace { dim, points: kontsevich(max_degree.max(1)), memo: HashMap::new() }
    }

    fn cup_divisor(&self, class: usize) -> Option<usize> {
        (class < self.dim).then_some(class + 1)
    }

    fn dual(&self, class: usize) -> usize {
        self.dim - class
    }

    /// ⟨∏ τ_{psi_i}(H^{class_i})⟩_{0,n,d}.
    pub fn correlator(&mut self, degree: u32, insertions: &[Insertion]) -> Q {
        let mut key = insertions.to_vec();
        key.sort_unstable();
        let n = key.len() as i64;
        let weight: i64 = key.iter().map(|&(p, c)| p as i64 + c as i64).sum();
        let vdim = self.dim as i64 - 3 + (self.dim as i64 + 1) * degree as i64 + n;
        if weight != vdim {
            return Q::zero();
        }
        if degree == 0 {
            return self.classical(&key);
        }
        if let Some(v) = self.memo.get(&(degree, key.clone())) {
            return v.clone();
        }
        let v = self.quantum(degree, &key);
        self.memo.insert((degree, key), v.clone());
        v
    }

    fn classical(&self, key: &[Insertion]) -> Q {
        let n = key.len();
        if n < 3 || key.iter().map(|&(_, c)| c).sum::<usize>() != self.dim {
            return Q::zero();
        }
        let denominator: BigInt = key.iter().map(|&(p, _)| factorial(p as u64)).product();
        Q::new(factorial(n as u64 - 3), denominator)
    }

    fn lowered(key: &[Insertion], skip: usize, j: usize, class: usize) -> Vec<Insertion> {
        let mut out: Vec<Insertion> = key.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, x)| *x).collect();
        let pos = if j > skip { j - 1 } else { j };
        out[pos] = (out[pos].0 - 1, class);
        out
    }

    fn without(key: &[Insertion], skip: usize) -> Vec<Insertion> {
        key.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, x)| *x).collect()
    }

    fn quantum(&mut self, degree: u32, key: &[Insertion]) -> Q {
        if self.dim == 1 && key.iter().all(|&(p, c)| p == 0 && c == 1) {
            return Q::one();
        }
        if let Some(u) = key.iter().position(|&x| x == (0, 0)) {
            let mut total = Q::zero();
            for j in (0..key.len()).filter(|&j| j != u && key[j].0 > 0) {
                total += self.correlator(degree, &Self::lowered(key, u, j, key[j].1));
            }
            return total;
        }
        if let Some(h) = key.iter().position(|&x| x == (0, 1)) {
            let mut total = int(degree as i64) * self.correlator(degree, &Self::without(key, h));
            for j in (0..key.len()).filter(|&j| j != h && key[j].0 > 0) {
                if let Some(c) = self.cup_divisor(key[j].1) {
                    total += self.correlator(degree, &Self::lowered(key, h, j, c));
                }
            }
            return total;
        }
        if key.iter().all(|&(p, _)| p == 0) {
            return Q::from_integer(self.points.get(degree as usize).cloned().unwrap_or_default());
        }
        self.with_enough_points(degree, key)
    }

    /// Topological recursion once there are three insertions; fewer are first padded with a
    /// divisor insertion through the divisor equation read backwards.
    fn with_enough_points(&mut self, degree: u32, key: &[Insertion]) -> Q {
        if key.len() >= 3 {
            return self.recursion(degree, key);
        }
        let mut padded = key.to_vec();
        padded.push((0, 1));
        padded.sort_unstable();
        let mut total = self.with_enough_points(degree, &padded);
        for j in (0..key.len()).filter(|&j| key[j].0 > 0) {
            if let Some(c) = self.cup_divisor(key[j].1) {
                let mut lowered = key.to_vec();
                lowered[j] = (key[j].0 - 1, c);
                total -= self.correlator(degree, &lowered);
            }
        }
        total / int(degree as i64)
    }

    fn recursion(&mut self, degree: u32, key: &[Insertion]) -> Q {
        let a = key.iter().position(|&(p, _)| p > 0).expect("a descendant insertion");
        let others: Vec<Insertion> = Self::without(key, a);
        let (rest, pair) = others.split_at(others.len() - 2);
        let head = (key[a].0 - 1, key[a].1);
        let mut total = Q::zero();
        for mask in 0u32..(1 << rest.len()) {
            let mut left = vec![head];
            let mut right = pair.to_vec();
            for (i, x) in rest.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    left.push(*x);
                } else {
                    right.push(*x);
                }
            }
            for d1 in 0..=degree {
                for e in 0..=self.dim {
                    let mut l = left.clone();
                    l.push((0, e));
                    let first = self.correlator(d1, &l);
                    if first.is_zero() {
                        continue;
                    }
                    let mut r = right.clone();
                    r.push((0, self.dual(e)));
                    total += first * self.correlator(degree - d1, &r);
                }
            }
        }
        total
    }
}

/// A truncated series Σ c_{d,k} Q^d s^k with d + k below `precision`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub precision: u32,
    pub terms: BTreeMap<(u32, u32), Q>,
}

impl Jet {
    pub fn zero(precision: u32) -> Self {
        Jet { precision, terms: BTreeMap::new() }
    }

    pub fn add_term(&mut self, d: u32, k: u32, c: Q) {
        if d + k >= self.precision || c.is_zero() {
            return;
        }
        let slot = self.terms.entry((d, k)).or_insert_with(Q::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&(d, k));
        }
    }

    pub fn add(&mut self, other: &Jet) {
        for ((d, k), c) in &other.terms {
            self.add_term(*d, *k, c.clone());
        }
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let mut out = Jet::zero(self.precision.min(other.precision));
        for ((d1, k1), a) in &self.terms {
            for ((d2, k2), b) in &other.terms {
                out.add_term(d1 + d2, k1 + k2, a * b);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Correlators at the point t = s·H² (dimension 2) or t = 0 (dimension 1), with the Novikov
/// variable Q absorbing the divisor direction.
pub struct BasePoint {
    pub space: ProjectiveSpace,
    pub precision: u32,
}

impl BasePoint {
    pub fn new(dim: usize, precision: u32) -> Self {
        BasePoint { space: ProjectiveSpace::new(dim, precision as usize), precision }
    }

    /// ⟨⟨∏ τ_{psi_i}(H^{class_i})⟩⟩_0 as a jet in Q and s.
    pub fn descendant(&mut self, insertions: &[Insertion]) -> Jet {
        let mut jet = Jet::zero(self.precision);
        let points = if self.space.dim == 2 { self.precision } else { 1 };
        for d in 0..self.precision {
            for k in 0..points.min(self.precision - d) {
                let mut all = insertions.to_vec();
                all.extend(std::iter::repeat((0, 2)).take(k as usize));
                let c = self.space.correlator(d, &all) / Q::from_integer(factorial(k as u64));
                jet.add_term(d, k, c);
            }
        }
        jet
    }

    /// Genus-zero ancestor ⟨ψ̄^{a_1}H^{c_1} ⋯⟩ at the base point, by the topological recursion
    /// on the moduli of stable rational curves applied to primary correlators.
    pub fn ancestor(&mut self, insertions: &[Insertion]) -> Jet {
        let n = insertions.len();
        let psi: u32 = insertions.iter().map(|x| x.0).sum();
        if n < 3 || psi as usize > n - 3 {
            return Jet::zero(self.precision);
        }
        let Some(a) = insertions.iter().position(|&(p, _)| p > 0) else {
            return self.descendant(insertions);
        };
        let others: Vec<Insertion> = ProjectiveSpace::without(insertions, a);
        let (rest, pair) = others.split_at(others.len() - 2);
        let head = (insertions[a].0 - 1, insertions[a].1);
        let mut total = Jet::zero(self.precision);
        for mask in 1u32..(1 << rest.len()) {
            let mut left = vec![head];
            let mut right = pair.to_vec();
            for (i, x) in rest.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    left.push(*x);
                } else {
                    right.push(*x);
                }
            }
            for e in 0..=self.space.dim {
                let mut l = left.clone();
                l.push((0, e));
                let mut r = right.clone();
                r.push((0, self.space.dual(e)));
                total.add(&self.ancestor(&l).mul(&self.ancestor(&r)));
            }
        }
        total
    }
}

/// 1/|Γ(½ + j)| from Γ(½ + j) = (2j)!√π / (4^j j!) and Γ(½ − j) = (−4)^j j!√π / (2j)!.
fn reciprocal_gamma_closed_form(j: i32) -> f64 {
    let k = j.unsigned_abs() as u64;
    let ratio = Q::new(factorial(2 * k), BigInt::from(4).pow(k as u32) * factorial(k));
    let ratio: f64 = num_traits::ToPrimitive::to_f64(&ratio.abs()).unwrap();
    let gamma = if j >= 0 { ratio } else { 1.0 / ratio };
    1.0 / (gamma * std::f64::consts::PI.sqrt())
}

/// ‖a‖_n summed term by term in compensated arithmetic.
pub fn direct_norm(terms: &[(i32, f64)], level: f64) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for &(j, c) in terms {
        let w = c * reciprocal_gamma_closed_form(j) * (level * j as f64).exp();
        let y = w * w - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum.sqrt()
}

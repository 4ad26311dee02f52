//! Exact arithmetic in cyclotomic fields Q(ζ_n).
//!
//! An element is stored in the power basis 1, ζ, …, ζ^{φ(n)-1} reduced modulo the
//! n-th cyclotomic polynomial, so equality is structural. Elements of different
//! orders are combined by embedding both into Q(ζ_lcm).

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Element of Q(ζ_order) in reduced power-basis form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cyclo {
    order: u32,
    coeffs: Vec<Rational>,
}

fn phi_cache() -> &'static Mutex<HashMap<u32, Arc<Vec<BigInt>>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<BigInt>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Coefficients (low degree first) of the n-th cyclotomic polynomial.
pub fn cyclotomic_polynomial(n: u32) -> Arc<Vec<BigInt>> {
    if let Some(p) = phi_cache().lock().unwrap().get(&n) {
        return p.clone();
    }
    // x^n - 1 divided by Φ_d for every proper divisor d
    let mut num: Vec<BigInt> = vec![BigInt::zero(); n as usize + 1];
    num[0] = BigInt::from(-1);
    num[n as usize] = BigInt::one();
    for d in 1..n {
        if n % d == 0 {
            let div = cyclotomic_polynomial(d);
            num = poly_div_exact(&num, &div);
        }
    }
    let arc = Arc::new(num);
    phi_cache().lock().unwrap().insert(n, arc.clone());
    arc
}

fn poly_div_exact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let mut rem = num.to_vec();
    let dn = den.len() - 1;
    let nn = rem.len() - 1;
    let mut quot = vec![BigInt::zero(); nn - dn + 1];
    for k in (0..=nn - dn).rev() {
        let c = rem[k + dn].clone();
        if c.is_zero() {
            continue;
        }
        quot[k] = c.clone();
        for (i, di) in den.iter().enumerate() {
            rem[k + i] -= &c * di;
        }
    }
    quot
}

pub fn euler_phi(n: u32) -> usize {
    cyclotomic_polynomial(n).len() - 1
}

fn lcm(a: u32, b: u32) -> u32 {
    a / a.gcd(&b) * b
}

fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

impl Cyclo {
    pub fn zero(order: u32) -> Self {
        Cyclo { order, coeffs: vec![Rational::zero(); euler_phi(order)] }
    }

    pub fn one(order: u32) -> Self {
        Self::from_rational(order, Rational::one())
    }

    pub fn from_rational(order: u32, r: Rational) -> Self {
        let mut z = Self::zero(order);
        z.coeffs[0] = r;
        z
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(1, rat(n))
    }

    pub fn rational(r: Rational) -> Self {
        Self::from_rational(1, r)
    }

    /// ζ_order^k.
    pub fn root_of_unity(order: u32, k: i64) -> Self {
        let k = k.rem_euclid(order as i64) as usize;
        let mut raw = vec![Rational::zero(); k + 1];
        raw[k] = Rational::one();
        Self::reduce(order, raw)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    fn reduce(order: u32, mut raw: Vec<Rational>) -> Self {
        let phi = cyclotomic_polynomial(order);
        let d = phi.len() - 1;
        if raw.len() > d {
            for k in (d..raw.len()).rev() {
                let c = std::mem::replace(&mut raw[k], Rational::zero());
                if c.is_zero() {
                    continue;
                }
                for (i, pi) in phi.iter().enumerate().take(d) {
                    if !pi.is_zero() {
                        let t = &c * Rational::from_integer(pi.clone());
                        raw[k - d + i] -= t;
                    }
                }
            }
            raw.truncate(d);
        }
        raw.resize(d, Rational::zero());
        Cyclo { order, coeffs: raw }
    }

    /// Re-express in Q(ζ_target); `target` must be a multiple of the order.
    pub fn embed(&self, target: u32) -> Self {
        if target == self.order {
            return self.clone();
        }
        assert!(target % self.order == 0, "cannot embed Q(ζ_{}) into Q(ζ_{})", self.order, target);
        let step = (target / self.order) as usize;
        let mut raw = vec![Rational::zero(); step * self.coeffs.len().max(1)];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                raw[i * step] = c.clone();
            }
        }
        Self::reduce(target, raw)
    }

    fn common(a: &Self, b: &Self) -> (Self, Self) {
        if a.order == b.order {
            return (a.clone(), b.clone());
        }
        let l = lcm(a.order, b.order);
        (a.embed(l), b.embed(l))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_rational().map(|r| r.is_one()).unwrap_or(false)
    }

    pub fn as_rational(&self) -> Option<Rational> {
        if self.coeffs.iter().skip(1).all(|c| c.is_zero()) {
            Some(self.coeffs.first().cloned().unwrap_or_else(Rational::zero))
        } else {
            None
        }
    }

    /// Smallest order in which the element is defined (drops redundant embedding).
    pub fn normalized(&self) -> Self {
        if self.as_rational().is_some() && self.order != 1 {
            return Self::from_rational(1, self.coeffs[0].clone());
        }
        self.clone()
    }

    pub fn neg(&self) -> Self {
        Cyclo { order: self.order, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = Self::common(self, other);
        Cyclo { order: a.order, coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if let Some(r) = other.as_rational() {
            return self.scale(&r);
        }
        if let Some(r) = self.as_rational() {
            return other.scale(&r);
        }
        let (a, b) = Self::common(self, other);
        let mut raw = vec![Rational::zero(); a.coeffs.len() + b.coeffs.len()];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                if !y.is_zero() {
                    raw[i + j] += x * y;
                }
            }
        }
        Self::reduce(a.order, raw)
    }

    pub fn scale(&self, r: &Rational) -> Self {
        Cyclo { order: self.order, coeffs: self.coeffs.iter().map(|c| c * r).collect() }
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.order);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via the extended Euclidean algorithm against Φ_n.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if let Some(r) = self.as_rational() {
            return Some(Self::from_rational(self.order, r.recip()));
        }
        let phi: Vec<Rational> =
            cyclotomic_polynomial(self.order).iter().map(|c| Rational::from_integer(c.clone())).collect();
        let a = trim(self.coeffs.clone());
        // invariant: r_i = s_i * a (mod Φ)
        let (mut r0, mut r1) = (phi, a);
        let (mut s0, mut s1) = (vec![], vec![Rational::one()]);
        while !(r1.len() == 1) {
            if r1.is_empty() {
                return None;
            }
            let (q, r) = poly_divmod(&r0, &r1);
            let s2 = poly_sub(&s0, &poly_mul(&q, &s1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s2);
        }
        let c = r1[0].recip();
        let out: Vec<Rational> = s1.iter().map(|x| x * &c).collect();
        Some(Self::reduce(self.order, out))
    }

    pub fn div(&self, other: &Self) -> Option<Self> {
        other.inv().map(|i| self.mul(&i))
    }

    /// Complex value under ζ_n ↦ exp(2πi/n).
    pub fn to_complex(&self) -> (f64, f64) {
        let n = self.order as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let v = rational_to_f64(c);
            let ang = 2.0 * std::f64::consts::PI * k as f64 / n;
            re += v * ang.cos();
            im += v * ang.sin();
        }
        (re, im)
    }

    pub fn abs_f64(&self) -> f64 {
        let (re, im) = self.to_complex();
        re.hypot(im)
    }

    /// If the element equals r·ζ_n^j, returns (r, j).
    pub fn as_scaled_root_of_unity(&self) -> Option<(Rational, u32)> {
        if self.is_zero() {
            return None;
        }
        for j in 0..self.order {
            let t = self.mul(&Self::root_of_unity(self.order, -(j as i64)));
            if let Some(r) = t.as_rational() {
                return Some((r, j));
            }
        }
        None
    }

    /// One square root inside Q(ζ_order), if it exists there.
    pub fn sqrt(&self) -> Option<Self> {
        self.nth_root(2)
    }

    /// One k-th root inside Q(ζ_order) for elements of the form r·ζ^j.
    pub fn nth_root(&self, k: u32) -> Option<Self> {
        if self.is_zero() {
            return Some(self.clone());
        }
        let n = self.order;
        let (r, j) = self.as_scaled_root_of_unity()?;
        // root of ζ_n^j: find j' with k j' ≡ j (mod n)
        let mut unit = None;
        for jp in 0..n {
            if (k as u64 * jp as u64) % n as u64 == j as u64 {
                unit = Some(Self::root_of_unity(n, jp as i64));
                break;
            }
        }
        let mut unit = unit?;
        let mut r = r;
        if r.is_negative() {
            r = -r;
            if k % 2 == 0 {
                // need a k-th root of -1, i.e. ζ_{2k}
                let m = 2 * k;
                if n % m != 0 {
                    return None;
                }
                unit = unit.mul(&Self::root_of_unity(n, (n / m) as i64));
            } else {
                unit = unit.neg();
            }
        }
        let root = rational_nth_root(&r, k, n)?;
        Some(root.mul(&unit).embed_or_keep(n))
    }

    fn embed_or_keep(self, n: u32) -> Self {
        if n % self.order == 0 {
            self.embed(n)
        } else {
            self
        }
    }

    /// All k-th roots inside Q(ζ_order) (empty if none).
    pub fn all_nth_roots(&self, k: u32) -> Vec<Self> {
        let Some(r0) = self.nth_root(k) else { return vec![] };
        if self.order % k != 0 {
            // only the roots generated by the available roots of unity
            let mut out = vec![r0.clone()];
            let g = self.order.gcd(&k);
            for i in 1..g {
                out.push(r0.mul(&Self::root_of_unity(self.order, (i * self.order / g) as i64)));
            }
            return out;
        }
        (0..k).map(|i| r0.mul(&Self::root_of_unity(self.order, (i * self.order / k) as i64))).collect()
    }

    /// Canonical text form, e.g. `3/2 + -1*zeta^2`.
    pub fn to_canonical(&self) -> String {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| if k == 0 { fmt_rational(c) } else { format!("{}*zeta^{}", fmt_rational(c), k) })
            .collect();
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }

    /// Parses the canonical form (sums of `c`, `c*zeta^k`, `zeta^k`) in Q(ζ_order).
    pub fn parse(text: &str, order: u32) -> Result<Self, String> {
        let mut acc = Self::zero(order);
        let cleaned = text.replace(' ', "");
        if cleaned.is_empty() {
            return Err("empty coefficient".into());
        }
        let mut terms = Vec::new();
        let mut cur = String::new();
        for (i, ch) in cleaned.chars().enumerate() {
            if ch == '+' && i > 0 && !cur.ends_with('^') {
                terms.push(std::mem::take(&mut cur));
            } else {
                cur.push(ch);
            }
        }
        terms.push(cur);
        for t in terms {
            let (coef, power) = match t.find("zeta") {
                None => (t.as_str(), 0i64),
                Some(pos) => {
                    let head = t[..pos].trim_end_matches('*');
                    let tail = &t[pos + 4..];
                    let p = if tail.is_empty() {
                        1
                    } else {
                        tail.trim_start_matches('^').parse::<i64>().map_err(|e| format!("bad zeta power in {t}: {e}"))?
                    };
                    let c = match head {
                        "" => "1",
                        "-" => "-1",
                        h => h,
                    };
                    (c, p)
                }
            };
            let r = parse_rational(coef)?;
            acc = acc.add(&Self::root_of_unity(order, power).scale(&r));
        }
        Ok(acc)
    }
}

impl fmt::Debug for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_canonical())
    }
}

impl fmt::Display for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_canonical())
    }
}

pub fn fmt_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = n.trim().parse().map_err(|_| format!("bad rational '{s}'"))?;
    let d: BigInt = d.trim().parse().map_err(|_| format!("bad rational '{s}'"))?;
    if d.is_zero() {
        return Err(format!("zero denominator in '{s}'"));
    }
    Ok(Rational::new(n, d))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        n / d
    } else {
        let bits = r.numer().bits().max(r.denom().bits()) as i64 - 60;
        let shift = bits.max(0) as u32;
        let n = (r.numer() >> shift).to_f64().unwrap();
        let d = (r.denom() >> shift).to_f64().unwrap();
        n / d
    }
}

fn trim(mut v: Vec<Rational>) -> Vec<Rational> {
    while v.last().map(|c| c.is_zero()).unwrap_or(false) {
        v.pop();
    }
    v
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

fn poly_sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let n = a.len().max(b.len());
    let mut out = vec![Rational::zero(); n];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    trim(out)
}

fn poly_divmod(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut rem = trim(a.to_vec());
    let b = trim(b.to_vec());
    let lead = b.last().unwrap().clone();
    if rem.len() < b.len() {
        return (vec![], rem);
    }
    let mut quot = vec![Rational::zero(); rem.len() - b.len() + 1];
    while rem.len() >= b.len() && !rem.is_empty() {
        let k = rem.len() - b.len();
        let c = rem.last().unwrap() / &lead;
        for (i, bi) in b.iter().enumerate() {
            rem[k + i] -= &c * bi;
        }
        quot[k] = c;
        rem = trim(rem);
    }
    (trim(quot), rem)
}

/// Square root of a positive prime p as an element of Q(ζ_n), via a Gauss sum.
fn sqrt_prime(p: u64, n: u32) -> Option<Cyclo> {
    if p == 2 {
        if n % 8 != 0 {
            return None;
        }
        let z = Cyclo::root_of_unity(n, (n / 8) as i64);
        return Some(z.add(&Cyclo::root_of_unity(n, -((n / 8) as i64))));
    }
    if n as u64 % p != 0 {
        return None;
    }
    let step = n as u64 / p;
    let mut g = Cyclo::zero(n);
    for a in 1..p {
        let chi = legendre(a, p);
        g = g.add(&Cyclo::root_of_unity(n, (a * step) as i64).scale(&rat(chi)));
    }
    if p % 4 == 1 {
        Some(g)
    } else {
        // g² = -p, so √p = -i g
        if n % 4 != 0 {
            return None;
        }
        let i = Cyclo::root_of_unity(n, (n / 4) as i64);
        Some(g.mul(&i).neg())
    }
}

fn legendre(a: u64, p: u64) -> i64 {
    let mut r = 1u64;
    let mut b = a % p;
    let mut e = (p - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    if r == 1 {
        1
    } else {
        -1
    }
}

fn sqrt_positive_integer(m: &BigInt, n: u32) -> Option<Cyclo> {
    let s = m.sqrt();
    if &s * &s == *m {
        return Some(Cyclo::from_rational(1, Rational::from_integer(s)));
    }
    // m = square * squarefree
    let mut rest = m.clone();
    let mut outside = BigInt::one();
    let mut primes = Vec::new();
    let mut p = BigInt::from(2u32);
    while &p * &p <= rest {
        let mut e = 0;
        while (&rest % &p).is_zero() {
            rest /= &p;
            e += 1;
        }
        for _ in 0..e / 2 {
            outside *= &p;
        }
        if e % 2 == 1 {
            primes.push(p.to_u64()?);
        }
        p += 1;
        if p > BigInt::from(1_000_000u32) {
            return None;
        }
    }
    if rest > BigInt::one() {
        primes.push(rest.to_u64()?);
    }
    let mut acc = Cyclo::from_rational(1, Rational::from_integer(outside));
    for q in primes {
        acc = acc.mul(&sqrt_prime(q, n)?);
    }
    Some(acc)
}

/// Positive real k-th root of a positive rational inside Q(ζ_n), if available.
fn rational_nth_root(r: &Rational, k: u32, n: u32) -> Option<Cyclo> {
    if k == 1 {
        return Some(Cyclo::from_rational(1, r.clone()));
    }
    let num = r.numer();
    let den = r.denom();
    if k == 2 {
        // √(a/b) = √(ab)/b
        let ab = num * den;
        let s = sqrt_positive_integer(&ab, n)?;
        return Some(s.scale(&Rational::new(BigInt::one(), den.clone())));
    }
    let a = num.nth_root(k);
    let b = den.nth_root(k);
    if num_traits::pow(a.clone(), k as usize) == *num && num_traits::pow(b.clone(), k as usize) == *den {
        return Some(Cyclo::from_rational(1, Rational::new(a, b)));
    }
    if k % 2 == 0 {
        let half = rational_nth_root(r, k / 2, n)?;
        let hr = half.as_rational()?;
        return rational_nth_root(&hr, 2, n);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_polynomials() {
        let p = cyclotomic_polynomial(12);
        let v: Vec<i64> = p.iter().map(|c| c.to_i64().unwrap()).collect();
        assert_eq!(v, vec![1, 0, -1, 0, 1]);
        assert_eq!(euler_phi(8), 4);
    }

    #[test]
    fn roots_of_unity_multiply() {
        let z = Cyclo::root_of_unity(12, 1);
        assert!(z.pow(12).is_one());
        assert!(!z.pow(6).is_one());
        assert_eq!(z.pow(6), Cyclo::one(12).neg());
    }

    #[test]
    fn inverse_round_trip() {
        let x = Cyclo::parse("2 + 3*zeta^1 + -1/2*zeta^3", 12).unwrap();
        let y = x.inv().unwrap();
        assert!(x.mul(&y).is_one());
    }

    #[test]
    fn square_roots() {
        for (v, n) in [(2i64, 8u32), (-2, 8), (3, 12), (-1, 4), (4, 1), (6, 24)] {
            let x = Cyclo::from_rational(n, rat(v));
            let s = x.sqrt().unwrap();
            assert_eq!(s.mul(&s).normalized(), x.normalized(), "sqrt of {v}");
        }
        assert!(Cyclo::from_rational(4, rat(3)).sqrt().is_none());
    }

    #[test]
    fn cube_roots_of_27() {
        let roots = Cyclo::from_rational(12, rat(27)).all_nth_roots(3);
        assert_eq!(roots.len(), 3);
        for r in &roots {
            assert_eq!(r.pow(3).normalized(), Cyclo::from_int(27));
        }
    }

    #[test]
    fn embedding_is_compatible() {
        let a = Cyclo::root_of_unity(4, 1);
        let b = Cyclo::root_of_unity(3, 1);
        let c = a.mul(&b);
        assert_eq!(c.order(), 12);
        assert_eq!(c, Cyclo::root_of_unity(12, 7));
    }

    #[test]
    fn canonical_text_round_trip() {
        let x = Cyclo::parse("-3/4 + zeta^2 + 5*zeta^3", 8).unwrap();
        assert_eq!(Cyclo::parse(&x.to_canonical(), 8).unwrap(), x);
    }
}

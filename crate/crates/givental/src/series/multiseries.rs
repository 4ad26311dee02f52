//! Truncated multivariate Laurent–Puiseux series over Q(ζ_c).
//!
//! Invariants:
//! - every exponent is a multiple of `1/m` (stored as integer numerators over `m`)
//! - no zero coefficients are stored
//! - every stored term has weighted valuation strictly below the truncation order
//! - the truncation order is `None` when the series is known exactly

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::cyclotomic::{fmt_rational, parse_rational, Cyclo, Rational};
use super::SeriesError;

/// A series variable with its valuation weight and its weight under the Euler derivation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub weight: Rational,
    pub euler_weight: Rational,
}

/// The coefficient ring together with the variable set shared by a family of series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ring {
    pub cyclotomic_order: u32,
    pub puiseux_denominator: u32,
    pub variables: Vec<Variable>,
    /// Precision used when an exact input produces an infinite expansion.
    pub default_order: Rational,
    /// valuation of exponent numerator e_i contributes e_i * val_units[i] / val_den
    val_units: Vec<i64>,
    val_den: i64,
}

impl Ring {
    pub fn new(
        cyclotomic_order: u32,
        puiseux_denominator: u32,
        variables: Vec<Variable>,
        default_order: Rational,
    ) -> Result<Arc<Ring>, SeriesError> {
        if cyclotomic_order == 0 || puiseux_denominator == 0 {
            return Err(SeriesError::InvalidRing("orders must be positive".into()));
        }
        let m = BigInt::from(puiseux_denominator);
        let mut den = BigInt::one();
        for v in &variables {
            if !v.weight.is_positive() {
                return Err(SeriesError::InvalidRing(format!("weight of {} must be positive", v.name)));
            }
            let w = &v.weight / Rational::from_integer(m.clone());
            den = num_integer::lcm(den, w.denom().clone());
        }
        let mut units = Vec::new();
        for v in &variables {
            let w = &v.weight / Rational::from_integer(m.clone()) * Rational::from_integer(den.clone());
            units.push(w.to_integer().to_i64().ok_or_else(|| SeriesError::InvalidRing("weight too large".into()))?);
        }
        Ok(Arc::new(Ring {
            cyclotomic_order,
            puiseux_denominator,
            variables,
            default_order,
            val_units: units,
            val_den: den.to_i64().unwrap(),
        }))
    }

    /// Ring without variables over Q(ζ_c).
    pub fn constants(cyclotomic_order: u32) -> Arc<Ring> {
        Ring::new(cyclotomic_order, 1, vec![], Rational::from_integer(BigInt::from(1))).unwrap()
    }

    pub fn nvars(&self) -> usize {
        self.variables.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    fn val(&self, e: &[i64]) -> i64 {
        e.iter().zip(&self.val_units).map(|(a, b)| a * b).sum()
    }

    pub fn to_units(&self, r: &Rational) -> i64 {
        let x = r * Rational::from_integer(BigInt::from(self.val_den));
        x.ceil().to_integer().to_i64().unwrap()
    }

    pub fn from_units(&self, u: i64) -> Rational {
        Rational::new(BigInt::from(u), BigInt::from(self.val_den))
    }

    fn embed(&self, c: &Cyclo) -> Cyclo {
        if c.order() == self.cyclotomic_order {
            c.clone()
        } else {
            c.embed(self.cyclotomic_order)
        }
    }
}

pub type Exponent = Vec<i64>;

#[derive(Clone)]
pub struct MultiSeries {
    ring: Arc<Ring>,
    terms: BTreeMap<Exponent, Cyclo>,
    /// truncation order in valuation units (see `Ring`); None means exact
    order: Option<i64>,
}

impl PartialEq for MultiSeries {
    fn eq(&self, other: &Self) -> bool {
        self.ring == other.ring && self.terms == other.terms && self.order == other.order
    }
}

impl MultiSeries {
    pub fn zero(ring: &Arc<Ring>) -> Self {
        MultiSeries { ring: ring.clone(), terms: BTreeMap::new(), order: None }
    }

    pub fn constant(ring: &Arc<Ring>, c: Cyclo) -> Self {
        let mut s = Self::zero(ring);
        if !c.is_zero() {
            s.terms.insert(vec![0; ring.nvars()], ring.embed(&c));
        }
        s
    }

    pub fn from_int(ring: &Arc<Ring>, n: i64) -> Self {
        Self::constant(ring, Cyclo::from_int(n))
    }

    pub fn from_rational(ring: &Arc<Ring>, r: Rational) -> Self {
        Self::constant(ring, Cyclo::rational(r))
    }

    pub fn one(ring: &Arc<Ring>) -> Self {
        Self::from_int(ring, 1)
    }

    /// c · ∏ x_i^{e_i/m}.
    pub fn monomial(ring: &Arc<Ring>, exponent: Exponent, c: Cyclo) -> Self {
        assert_eq!(exponent.len(), ring.nvars());
        let mut s = Self::zero(ring);
        if !c.is_zero() {
            s.terms.insert(exponent, ring.embed(&c));
        }
        s
    }

    /// Series with the given terms, truncated at `order` (None: exact).
    pub fn from_terms(ring: &Arc<Ring>, terms: BTreeMap<Exponent, Cyclo>, order: Option<Rational>) -> Self {
        let mut s = Self::zero(ring);
        for (e, c) in terms {
            assert_eq!(e.len(), ring.nvars());
            if !c.is_zero() {
                s.terms.insert(e, ring.embed(&c));
            }
        }
        s.with_order(order.map(|o| ring.to_units(&o)))
    }

    /// The variable with the given index, as an exact series.
    pub fn variable(ring: &Arc<Ring>, index: usize) -> Self {
        let mut e = vec![0; ring.nvars()];
        e[index] = ring.puiseux_denominator as i64;
        Self::monomial(ring, e, Cyclo::from_int(1))
    }

    pub fn ring(&self) -> &Arc<Ring> {
        &self.ring
    }

    pub fn terms(&self) -> &BTreeMap<Exponent, Cyclo> {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_exact(&self) -> bool {
        self.order.is_none()
    }

    pub fn truncation_order(&self) -> Option<Rational> {
        self.order.map(|u| self.ring.from_units(u))
    }

    /// Lowers the truncation order to `order` (never raises it).
    pub fn truncate(&self, order: &Rational) -> Self {
        let u = self.ring.to_units(order);
        self.truncate_units(u)
    }

    fn truncate_units(&self, u: i64) -> Self {
        let new = match self.order {
            Some(o) if o <= u => o,
            _ => u,
        };
        let ring = self.ring.clone();
        let terms = self.terms.iter().filter(|(e, _)| ring.val(e) < new).map(|(e, c)| (e.clone(), c.clone())).collect();
        MultiSeries { ring, terms, order: Some(new) }
    }

    fn with_order(mut self, order: Option<i64>) -> Self {
        if let Some(o) = order {
            let ring = self.ring.clone();
            self.terms.retain(|e, _| ring.val(e) < o);
        }
        self.order = order;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Zero as far as the known part goes.
    pub fn is_exactly_zero(&self) -> bool {
        self.terms.is_empty() && self.order.is_none()
    }

    fn check_ring(&self, other: &Self) -> Result<(), SeriesError> {
        if Arc::ptr_eq(&self.ring, &other.ring) || self.ring == other.ring {
            Ok(())
        } else {
            Err(SeriesError::RingMismatch)
        }
    }

    /// Lowest valuation of a stored term, in valuation units.
    fn vmin_units(&self) -> Option<i64> {
        self.terms.keys().map(|e| self.ring.val(e)).min()
    }

    /// Lower bound for the valuation of the whole series (known and unknown part).
    fn vbound_units(&self) -> Option<i64> {
        match (self.vmin_units(), self.order) {
            (Some(v), _) => Some(v),
            (None, Some(o)) => Some(o),
            (None, None) => None,
        }
    }

    pub fn valuation(&self) -> Option<Rational> {
        self.vmin_units().map(|u| self.ring.from_units(u))
    }

    pub fn exponent_valuation(&self, e: &[i64]) -> Rational {
        self.ring.from_units(self.ring.val(e))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_ring(other)?;
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            match terms.get_mut(e) {
                Some(x) => {
                    *x = x.add(c);
                    if x.is_zero() {
                        terms.remove(e);
                    }
                }
                None => {
                    terms.insert(e.clone(), c.clone());
                }
            }
        }
        let order = min_opt(self.order, other.order);
        Ok(MultiSeries { ring: self.ring.clone(), terms, order }.with_order(order))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("ring mismatch")
    }

    pub fn neg(&self) -> Self {
        MultiSeries {
            ring: self.ring.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
            order: self.order,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Cyclo) -> Self {
        if c.is_zero() {
            return MultiSeries { ring: self.ring.clone(), terms: BTreeMap::new(), order: self.order };
        }
        let c = self.ring.embed(c);
        MultiSeries {
            ring: self.ring.clone(),
            terms: self.terms.iter().map(|(e, x)| (e.clone(), x.mul(&c))).collect(),
            order: self.order,
        }
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return MultiSeries { ring: self.ring.clone(), terms: BTreeMap::new(), order: self.order };
        }
        MultiSeries {
            ring: self.ring.clone(),
            terms: self.terms.iter().map(|(e, x)| (e.clone(), x.scale(r))).collect(),
            order: self.order,
        }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_ring(other)?;
        if self.is_exactly_zero() || other.is_exactly_zero() {
            return Ok(Self::zero(&self.ring));
        }
        let order = match (self.order, other.order) {
            (None, None) => None,
            (Some(oa), None) => Some(oa + other.vbound_units().unwrap()),
            (None, Some(ob)) => Some(ob + self.vbound_units().unwrap()),
            (Some(oa), Some(ob)) => {
                Some((oa + other.vbound_units().unwrap()).min(ob + self.vbound_units().unwrap()))
            }
        };
        let ring = &self.ring;
        let mut terms: BTreeMap<Exponent, Cyclo> = BTreeMap::new();
        let bv: Vec<(i64, &Exponent, &Cyclo)> = other.terms.iter().map(|(e, c)| (ring.val(e), e, c)).collect();
        for (ea, ca) in &self.terms {
            let va = ring.val(ea);
            for (vb, eb, cb) in &bv {
                if let Some(o) = order {
                    if va + vb >= o {
                        continue;
                    }
                }
                let e: Exponent = ea.iter().zip(eb.iter()).map(|(x, y)| x + y).collect();
                let p = ca.mul(cb);
                match terms.get_mut(&e) {
                    Some(x) => *x = x.add(&p),
                    None => {
                        terms.insert(e, p);
                    }
                }
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(MultiSeries { ring: self.ring.clone(), terms, order })
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("ring mismatch")
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(&self.ring);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Terms of minimal valuation.
    pub fn leading_part(&self) -> Self {
        let v = match self.vmin_units() {
            Some(v) => v,
            None => return Self::zero(&self.ring),
        };
        let ring = self.ring.clone();
        let terms = self.terms.iter().filter(|(e, _)| ring.val(e) == v).map(|(e, c)| (e.clone(), c.clone())).collect();
        MultiSeries { ring, terms, order: None }
    }

    /// The single leading monomial, if the lowest-valuation part is a monomial.
    pub fn leading_monomial(&self) -> Option<(Exponent, Cyclo)> {
        let lp = self.leading_part();
        if lp.terms.len() == 1 {
            lp.terms.into_iter().next()
        } else {
            None
        }
    }

    fn working_order(&self) -> i64 {
        match self.order {
            Some(o) => o,
            None => self.ring.to_units(&self.ring.default_order),
        }
    }

    pub fn try_inv(&self) -> Result<Self, SeriesError> {
        let (e0, c0) = self.leading_monomial().ok_or(SeriesError::NotInvertible)?;
        let cinv = c0.inv().ok_or(SeriesError::NotInvertible)?;
        let ninv: Exponent = e0.iter().map(|x| -x).collect();
        let lead_inv = Self::monomial(&self.ring, ninv, cinv);
        if self.terms.len() == 1 && self.order.is_none() {
            return Ok(lead_inv);
        }
        // self = L (1 + eps); 1/self = L^{-1} Σ (-eps)^k
        let v0 = self.ring.val(&e0);
        let rel_order = self.working_order() - v0;
        let eps = self.mul(&lead_inv).sub(&Self::one(&self.ring)).truncate_units(rel_order);
        let geo = geometric(&eps.neg(), rel_order)?;
        Ok(geo.mul(&lead_inv))
    }

    pub fn inv(&self) -> Self {
        self.try_inv().expect("series not invertible")
    }

    pub fn try_div(&self, other: &Self) -> Result<Self, SeriesError> {
        Ok(self.mul(&other.try_inv()?))
    }

    /// Square root with the principal choice made on the leading coefficient.
    pub fn try_sqrt(&self) -> Result<Self, SeriesError> {
        self.try_root(2, 0)
    }

    /// k-th root; `branch` selects which root of the leading coefficient is used.
    pub fn try_root(&self, k: u32, branch: usize) -> Result<Self, SeriesError> {
        let (e0, c0) = self.leading_monomial().ok_or(SeriesError::NotInvertible)?;
        let roots = c0.all_nth_roots(k);
        let croot = roots.get(branch).cloned().ok_or_else(|| SeriesError::ExtensionTooSmall(c0.to_canonical()))?;
        let mut er = Vec::new();
        for x in &e0 {
            if x % k as i64 != 0 {
                return Err(SeriesError::ExtensionTooSmall(format!("exponent {x}/{} not divisible", self.ring.puiseux_denominator)));
            }
            er.push(x / k as i64);
        }
        let lead_root = Self::monomial(&self.ring, er, croot);
        if self.terms.len() == 1 && self.order.is_none() {
            return Ok(lead_root);
        }
        let lead = Self::monomial(&self.ring, e0.clone(), c0);
        let v0 = self.ring.val(&e0);
        let rel_order = self.working_order() - v0;
        let eps = self.mul(&lead.inv()).sub(&Self::one(&self.ring)).truncate_units(rel_order);
        // (1+eps)^{1/k} by the binomial series
        let alpha = Rational::new(BigInt::one(), BigInt::from(k));
        let mut acc = Self::one(&self.ring).truncate_units(rel_order);
        let mut power = Self::one(&self.ring);
        let mut binom = Rational::one();
        let mut j = 0i64;
        loop {
            power = power.mul(&eps).truncate_units(rel_order);
            if power.is_zero() {
                break;
            }
            binom = binom * (&alpha - Rational::from_integer(BigInt::from(j))) / Rational::from_integer(BigInt::from(j + 1));
            acc = acc.add(&power.scale_rational(&binom));
            j += 1;
            if j > 10_000 {
                return Err(SeriesError::NonPositiveValuation);
            }
        }
        Ok(acc.mul(&lead_root))
    }

    /// exp(a) for valuation(a) > 0.
    pub fn try_exp(&self) -> Result<Self, SeriesError> {
        if let Some(v) = self.vmin_units() {
            if v <= 0 {
                return Err(SeriesError::NonPositiveValuation);
            }
        }
        let order = self.working_order();
        let a = self.truncate_units(order);
        let mut acc = Self::one(&self.ring).truncate_units(order);
        let mut term = Self::one(&self.ring);
        let mut k = 1i64;
        loop {
            term = term.mul(&a).truncate_units(order).scale_rational(&Rational::new(BigInt::one(), BigInt::from(k)));
            if term.is_zero() {
                break;
            }
            acc = acc.add(&term);
            k += 1;
        }
        Ok(acc)
    }

    /// log(a) for a with constant term 1 and otherwise positive valuation.
    pub fn try_log(&self) -> Result<Self, SeriesError> {
        let one = Self::one(&self.ring);
        let eps = self.sub(&one);
        if let Some(v) = eps.vmin_units() {
            if v <= 0 {
                return Err(SeriesError::BadConstantTerm);
            }
        }
        let order = self.working_order();
        let eps = eps.truncate_units(order);
        let mut acc = Self::zero(&self.ring).truncate_units(order);
        let mut power = one.clone();
        let mut k = 1i64;
        loop {
            power = power.mul(&eps).truncate_units(order);
            if power.is_zero() {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            acc = acc.add(&power.scale_rational(&Rational::new(BigInt::from(sign), BigInt::from(k))));
            k += 1;
        }
        Ok(acc)
    }

    /// Applies the derivation x_i ∂/∂x_i weighted by `weights[i]` (a monomial with exponent e
    /// is multiplied by Σ weights[i]·e_i/m).
    pub fn weighted_euler(&self, weights: &[Rational]) -> Self {
        let m = Rational::from_integer(BigInt::from(self.ring.puiseux_denominator));
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let f: Rational = e.iter().zip(weights).map(|(x, w)| Rational::from_integer(BigInt::from(*x)) * w).sum::<Rational>() / &m;
            if !f.is_zero() {
                terms.insert(e.clone(), c.scale(&f));
            }
        }
        MultiSeries { ring: self.ring.clone(), terms, order: self.order }
    }

    /// Euler derivation defined by the ring's variable Euler weights.
    pub fn euler_derivative(&self) -> Self {
        let w: Vec<Rational> = self.ring.variables.iter().map(|v| v.euler_weight.clone()).collect();
        self.weighted_euler(&w)
    }

    /// x ∂/∂x for one variable.
    pub fn log_derivative_in(&self, index: usize) -> Self {
        let mut w = vec![Rational::zero(); self.ring.nvars()];
        w[index] = Rational::one();
        self.weighted_euler(&w)
    }

    /// Inverse of `weighted_euler` on series whose terms all have nonzero weight.
    pub fn weighted_euler_inverse(&self, weights: &[Rational]) -> Result<Self, SeriesError> {
        let m = Rational::from_integer(BigInt::from(self.ring.puiseux_denominator));
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let f: Rational = e.iter().zip(weights).map(|(x, w)| Rational::from_integer(BigInt::from(*x)) * w).sum::<Rational>() / &m;
            if f.is_zero() {
                return Err(SeriesError::NotIntegrable(format!("{:?}", e)));
            }
            terms.insert(e.clone(), c.scale(&f.recip()));
        }
        Ok(MultiSeries { ring: self.ring.clone(), terms, order: self.order })
    }

    /// Substitutes each variable `i` in `assignments` by the given series (integer powers only
    /// for non-monomial replacements). The result order is the guaranteed order of the composition.
    pub fn substitute(&self, assignments: &BTreeMap<usize, MultiSeries>) -> Result<Self, SeriesError> {
        let m = self.ring.puiseux_denominator as i64;
        let mut acc = Self::zero(&self.ring);
        let mut acc_order: Option<i64> = None;
        let mut cache: BTreeMap<(usize, i64), MultiSeries> = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut keep = e.clone();
            let mut factor = Self::one(&self.ring);
            for (&i, rep) in assignments {
                let ex = e[i];
                if ex == 0 {
                    continue;
                }
                keep[i] = 0;
                let p = if let Some(p) = cache.get(&(i, ex)) {
                    p.clone()
                } else {
                    let p = if rep.is_exactly_zero() {
                        if ex > 0 {
                            Self::zero(&self.ring)
                        } else {
                            return Err(SeriesError::NotInvertible);
                        }
                    } else if ex % m == 0 {
                        let n = ex / m;
                        if n >= 0 {
                            rep.pow(n as u32)
                        } else {
                            rep.try_inv()?.pow((-n) as u32)
                        }
                    } else {
                        let r = rep.try_root(m as u32, 0)?;
                        if ex > 0 {
                            r.pow(ex as u32)
                        } else {
                            r.try_inv()?.pow((-ex) as u32)
                        }
                    };
                    cache.insert((i, ex), p.clone());
                    p
                };
                factor = factor.mul(&p);
            }
            let term = Self::monomial(&self.ring, keep, c.clone()).mul(&factor);
            acc = acc.add(&term);
        }
        if let Some(o) = self.order {
            // unknown part has old valuation >= o; each replaced variable may lower valuations
            let mut bound = o;
            for (&i, rep) in assignments {
                let unit = self.ring.val_units[i] * m;
                if let Some(rv) = rep.vbound_units() {
                    if rv < unit && o > 0 {
                        bound = bound.min((o * rv).div_euclid(unit));
                    }
                }
            }
            acc_order = Some(bound);
        }
        let order = min_opt(acc.order, acc_order);
        Ok(acc.with_order(order))
    }

    /// ∂/∂x_index.
    pub fn partial(&self, index: usize) -> Self {
        let m = self.ring.puiseux_denominator as i64;
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[index] == 0 {
                continue;
            }
            let mut f = e.clone();
            f[index] -= m;
            terms.insert(f, c.scale(&Rational::new(BigInt::from(e[index]), BigInt::from(m))));
        }
        let unit = self.ring.val_units[index] * m;
        MultiSeries { ring: self.ring.clone(), terms, order: self.order.map(|o| o - unit) }
    }

    /// Antiderivative in x_index with zero constant of integration.
    pub fn integrate(&self, index: usize) -> Result<Self, SeriesError> {
        let m = self.ring.puiseux_denominator as i64;
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut f = e.clone();
            f[index] += m;
            if f[index] == 0 {
                return Err(SeriesError::NotIntegrable(format!("{:?}", e)));
            }
            terms.insert(f.clone(), c.scale(&Rational::new(BigInt::from(m), BigInt::from(f[index]))));
        }
        let unit = self.ring.val_units[index] * m;
        Ok(MultiSeries { ring: self.ring.clone(), terms, order: self.order.map(|o| o + unit) })
    }

    /// Applies `f` to every coefficient.
    pub fn map_coefficients(&self, f: impl Fn(&Exponent, &Cyclo) -> Cyclo) -> Self {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let x = f(e, c);
            if !x.is_zero() {
                terms.insert(e.clone(), self.ring.embed(&x));
            }
        }
        MultiSeries { ring: self.ring.clone(), terms, order: self.order }
    }

    /// Sets variable `index` to zero.
    pub fn set_zero(&self, index: usize) -> Self {
        let terms = self.terms.iter().filter(|(e, _)| e[index] == 0).map(|(e, c)| (e.clone(), c.clone())).collect();
        MultiSeries { ring: self.ring.clone(), terms, order: self.order }
    }

    /// Coefficient of an exact exponent.
    pub fn coefficient(&self, e: &[i64]) -> Cyclo {
        self.terms.get(e).cloned().unwrap_or_else(|| Cyclo::zero(self.ring.cyclotomic_order))
    }

    /// Constant term.
    pub fn constant_term(&self) -> Cyclo {
        self.coefficient(&vec![0; self.ring.nvars()])
    }

    /// Equality on the common known range.
    pub fn agrees_with(&self, other: &Self) -> bool {
        let o = min_opt(self.order, other.order);
        let a = self.clone().with_order(o);
        let b = other.clone().with_order(o);
        a.terms == b.terms
    }

    /// True if the known part is zero.
    pub fn is_zero_to_order(&self) -> bool {
        self.terms.is_empty()
    }

    /// Canonical text: `(coefficient)[e1,e2,...]` terms joined by ` + `, then ` + O(order)`.
    pub fn to_canonical(&self) -> String {
        let m = self.ring.puiseux_denominator as i64;
        let mut parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let ex: Vec<String> = e.iter().map(|x| fmt_rational(&Rational::new(BigInt::from(*x), BigInt::from(m)))).collect();
                format!("({})[{}]", c.to_canonical(), ex.join(","))
            })
            .collect();
        if let Some(o) = self.truncation_order() {
            parts.push(format!("O({})", fmt_rational(&o)));
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }

    /// Parses the output of `to_canonical`.
    pub fn parse(ring: &Arc<Ring>, text: &str) -> Result<Self, SeriesError> {
        let mut s = Self::zero(ring);
        let t = text.trim();
        if t == "0" {
            return Ok(s);
        }
        let m = Rational::from_integer(BigInt::from(ring.puiseux_denominator));
        let mut order = None;
        for part in split_top(t) {
            let part = part.trim();
            if let Some(o) = part.strip_prefix("O(").and_then(|x| x.strip_suffix(')')) {
                order = Some(ring.to_units(&parse_rational(o).map_err(SeriesError::Parse)?));
                continue;
            }
            let close = part.rfind(")[").ok_or_else(|| SeriesError::Parse(format!("bad term '{part}'")))?;
            let coef = &part[1..close];
            let exps = &part[close + 2..part.len() - 1];
            let c = Cyclo::parse(coef, ring.cyclotomic_order).map_err(SeriesError::Parse)?;
            let mut e = Vec::new();
            if !exps.is_empty() {
                for x in exps.split(',') {
                    let r = parse_rational(x).map_err(SeriesError::Parse)? * &m;
                    if !r.is_integer() {
                        return Err(SeriesError::Parse(format!("exponent {x} not a multiple of 1/m")));
                    }
                    e.push(r.to_integer().to_i64().unwrap());
                }
            }
            if e.len() != ring.nvars() {
                return Err(SeriesError::Parse("exponent length mismatch".into()));
            }
            s = s.add(&Self::monomial(ring, e, c));
        }
        Ok(s.with_order(order))
    }

    /// Approximate complex value of the coefficient sum weighted by |coefficient|.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.abs_f64()).fold(0.0, f64::max)
    }
}

fn split_top(t: &str) -> Vec<String> {
    // split on " + " at parenthesis depth 0
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let chars: Vec<char> = t.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            _ => {}
        }
        if depth == 0 && ch == '+' && i > 0 && chars[i - 1] == ' ' && i + 1 < chars.len() && chars[i + 1] == ' ' {
            out.push(std::mem::take(&mut cur));
            i += 2;
            continue;
        }
        cur.push(ch);
        i += 1;
    }
    out.push(cur);
    out
}

fn min_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(x.min(y)),
    }
}

/// Σ_{k≥0} x^k for valuation(x) > 0, to relative order `order`.
fn geometric(x: &MultiSeries, order: i64) -> Result<MultiSeries, SeriesError> {
    if let Some(v) = x.vmin_units() {
        if v <= 0 {
            return Err(SeriesError::NotInvertible);
        }
    }
    let mut acc = MultiSeries::one(&x.ring).truncate_units(order);
    let mut power = MultiSeries::one(&x.ring);
    loop {
        power = power.mul(x).truncate_units(order);
        if power.is_zero() {
            break;
        }
        acc = acc.add(&power);
    }
    Ok(acc)
}

impl fmt::Debug for MultiSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_canonical())
    }
}

//! Frobenius manifold input data and its JSON document form.

use std::path::Path;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::FrobeniusError;
use crate::series::cyclotomic::{fmt_rational, parse_rational};
use crate::series::{Cyclo, Matrix, MultiSeries, Rational, Ring, Variable};

/// One term `coefficient · Q^novikov · ∏ t_k^{t_k}` of the genus-zero potential.
/// Terms with nonzero `novikov` stand for `coefficient · Q^d e^{d·t_div} · ∏ t_k^{t_k}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PotentialTerm {
    pub t: Vec<u32>,
    pub novikov: Vec<u32>,
    pub coefficient: Rational,
}

/// A formal base-point coordinate `t^coordinate = scale · parameter`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasePointEntry {
    pub coordinate: usize,
    pub scale: Rational,
    pub parameter: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrobeniusSpec {
    pub name: String,
    pub degrees: Vec<Rational>,
    pub divisor_count: usize,
    pub pairing: Vec<Vec<Rational>>,
    pub potential: Vec<PotentialTerm>,
    /// Novikov degrees `>= novikov_bound` are absent from `potential` (None: exact).
    pub novikov_bound: Option<u32>,
    pub rho: Vec<Rational>,
    pub conformal_dimension: Rational,
    pub puiseux_denominator: u32,
    pub cyclotomic_order: u32,
    pub novikov_weights: Vec<Rational>,
    pub base_point: Vec<BasePointEntry>,
    pub small_locus: bool,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermRecord {
    pub t: Vec<u32>,
    pub novikov: Vec<u32>,
    pub coefficient: String,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EulerRecord {
    pub rho: Vec<String>,
    pub conformal_dimension: String,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RingRecord {
    pub puiseux_denominator: u32,
    pub cyclotomic_order: u32,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BasePointRecord {
    pub coordinate: usize,
    pub scale: String,
    pub parameter: String,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    pub name: String,
    pub degrees: Vec<String>,
    pub divisor_count: usize,
    pub pairing: Vec<Vec<String>>,
    pub potential: Vec<TermRecord>,
    pub novikov_bound: Option<u32>,
    pub euler: EulerRecord,
    pub ring: RingRecord,
    pub novikov_weights: Vec<String>,
    pub base_point: Vec<BasePointRecord>,
    pub small_locus: bool,
}

const SHIPPED: [(&str, &str); 4] = [
    ("point", include_str!("../../../../specs/point.json")),
    ("p1", include_str!("../../../../specs/p1.json")),
    ("p2", include_str!("../../../../specs/p2.json")),
    ("a2", include_str!("../../../../specs/a2.json")),
];

fn rat(s: &str) -> Result<Rational, FrobeniusError> {
    parse_rational(s).map_err(FrobeniusError::Parse)
}

fn rats(v: &[String]) -> Result<Vec<Rational>, FrobeniusError> {
    v.iter().map(|s| rat(s)).collect()
}

fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

impl FrobeniusSpec {
    pub fn shipped_names() -> Vec<&'static str> {
        SHIPPED.iter().map(|(n, _)| *n).collect()
    }

    /// A shipped example by name (`point`, `p1`, `p2`, `a2`).
    pub fn shipped(name: &str) -> Result<Self, FrobeniusError> {
        let text = SHIPPED
            .iter()
            .find(|(n, _)| *n == name.to_ascii_lowercase())
            .map(|(_, t)| *t)
            .ok_or_else(|| FrobeniusError::Parse(format!("no shipped spec named '{name}'")))?;
        Self::from_json(text)
    }

    /// Resolves a shipped name or a path to a JSON document.
    pub fn resolve(name_or_path: &str) -> Result<Self, FrobeniusError> {
        if Self::shipped_names().contains(&name_or_path.to_ascii_lowercase().as_str()) {
            return Self::shipped(name_or_path);
        }
        Self::load(Path::new(name_or_path))
    }

    pub fn load(path: &Path) -> Result<Self, FrobeniusError> {
        let text = std::fs::read_to_string(path).map_err(|e| FrobeniusError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, FrobeniusError> {
        let doc: SpecDocument = serde_json::from_str(text).map_err(|e| FrobeniusError::Parse(e.to_string()))?;
        Self::from_document(&doc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_document()).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_document(doc: &SpecDocument) -> Result<Self, FrobeniusError> {
        let pairing = doc.pairing.iter().map(|row| rats(row)).collect::<Result<Vec<_>, _>>()?;
        let potential = doc
            .potential
            .iter()
            .map(|t| Ok(PotentialTerm { t: t.t.clone(), novikov: t.novikov.clone(), coefficient: rat(&t.coefficient)? }))
            .collect::<Result<Vec<_>, FrobeniusError>>()?;
        let base_point = doc
            .base_point
            .iter()
            .map(|b| Ok(BasePointEntry { coordinate: b.coordinate, scale: rat(&b.scale)?, parameter: b.parameter.clone() }))
            .collect::<Result<Vec<_>, FrobeniusError>>()?;
        let spec = FrobeniusSpec {
            name: doc.name.clone(),
            degrees: rats(&doc.degrees)?,
            divisor_count: doc.divisor_count,
            pairing,
            potential,
            novikov_bound: doc.novikov_bound,
            rho: rats(&doc.euler.rho)?,
            conformal_dimension: rat(&doc.euler.conformal_dimension)?,
            puiseux_denominator: doc.ring.puiseux_denominator,
            cyclotomic_order: doc.ring.cyclotomic_order,
            novikov_weights: rats(&doc.novikov_weights)?,
            base_point,
            small_locus: doc.small_locus,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_document(&self) -> SpecDocument {
        let f = |v: &[Rational]| v.iter().map(fmt_rational).collect::<Vec<_>>();
        SpecDocument {
            name: self.name.clone(),
            degrees: f(&self.degrees),
            divisor_count: self.divisor_count,
            pairing: self.pairing.iter().map(|r| f(r)).collect(),
            potential: self
                .potential
                .iter()
                .map(|t| TermRecord { t: t.t.clone(), novikov: t.novikov.clone(), coefficient: fmt_rational(&t.coefficient) })
                .collect(),
            novikov_bound: self.novikov_bound,
            euler: EulerRecord { rho: f(&self.rho), conformal_dimension: fmt_rational(&self.conformal_dimension) },
            ring: RingRecord { puiseux_denominator: self.puiseux_denominator, cyclotomic_order: self.cyclotomic_order },
            novikov_weights: f(&self.novikov_weights),
            base_point: self
                .base_point
                .iter()
                .map(|b| BasePointRecord { coordinate: b.coordinate, scale: fmt_rational(&b.scale), parameter: b.parameter.clone() })
                .collect(),
            small_locus: self.small_locus,
        }
    }

    pub fn rank(&self) -> usize {
        self.degrees.len()
    }

    /// Euler weight 1 − ½deg φ_k of the flat coordinate t^k.
    pub fn coordinate_weight(&self, k: usize) -> Rational {
        int(1) - &self.degrees[k] / int(2)
    }

    /// Euler degree of a potential term.
    fn term_weight(&self, term: &PotentialTerm) -> Rational {
        let mut w = Rational::zero();
        for (k, e) in term.t.iter().enumerate() {
            w += self.coordinate_weight(k) * int(*e as i64);
        }
        for (i, d) in term.novikov.iter().enumerate() {
            w += &self.rho[i] * int(*d as i64);
        }
        w
    }

    fn violation(msg: impl Into<String>) -> FrobeniusError {
        FrobeniusError::InvariantViolation(msg.into())
    }

    pub fn validate(&self) -> Result<(), FrobeniusError> {
        let n = self.rank();
        let r = self.divisor_count;
        if n == 0 {
            return Err(Self::violation("rank must be positive"));
        }
        if !self.degrees[0].is_zero() {
            return Err(Self::violation("unit φ0 must have degree 0"));
        }
        if r + 1 > n {
            return Err(Self::violation("divisor_count exceeds rank"));
        }
        for i in 1..=r {
            if self.degrees[i] != int(2) {
                return Err(Self::violation(format!("divisor class φ{i} must have degree 2")));
            }
        }
        if self.rho.len() != r || self.novikov_weights.len() != r {
            return Err(Self::violation("rho and novikov_weights need one entry per divisor class"));
        }
        if self.novikov_weights.iter().any(|w| !w.is_positive()) {
            return Err(Self::violation("novikov weights must be positive"));
        }
        if self.pairing.len() != n || self.pairing.iter().any(|row| row.len() != n) {
            return Err(Self::violation("pairing must be a square matrix of the rank"));
        }
        for a in 0..n {
            for b in 0..n {
                if self.pairing[a][b] != self.pairing[b][a] {
                    return Err(Self::violation("pairing is not symmetric"));
                }
                if !self.pairing[a][b].is_zero() && &self.degrees[a] + &self.degrees[b] != &self.conformal_dimension * int(2) {
                    return Err(Self::violation(format!("pairing couples φ{a}, φ{b} of non-complementary degree")));
                }
            }
        }
        let ring = Ring::constants(1);
        let g = Matrix::from_rationals(&ring, &self.pairing);
        if g.determinant().is_zero() {
            return Err(Self::violation("pairing is degenerate"));
        }
        let target = int(3) - &self.conformal_dimension;
        let mut cubic = vec![vec![Rational::zero(); n]; n];
        for term in &self.potential {
            if term.t.len() != n || term.novikov.len() != r {
                return Err(Self::violation("potential term has wrong exponent length"));
            }
            let quantum = term.novikov.iter().any(|d| *d > 0);
            if quantum {
                if term.t[0] > 0 {
                    return Err(Self::violation("quantum term depends on t0"));
                }
                if (1..=r).any(|i| term.t[i] > 0) {
                    return Err(Self::violation("quantum term is not in divisor form"));
                }
                if let Some(b) = self.novikov_bound {
                    if term.novikov.iter().map(|d| *d as u64).sum::<u64>() >= b as u64 {
                        return Err(Self::violation("quantum term beyond novikov_bound"));
                    }
                }
            } else {
                let total: u64 = term.t.iter().map(|e| *e as u64).sum();
                if total < 3 || (term.t[0] > 0 && total != 3) {
                    return Err(Self::violation("classical terms must have degree at least 3, and exactly 3 when they involve t0"));
                }
            }
            if self.term_weight(term) != target {
                return Err(Self::violation(format!("potential term {:?} is not quasi-homogeneous", term.t)));
            }
            if !quantum && term.t[0] > 0 {
                let mut rest: Vec<usize> = Vec::new();
                let mut e = term.t.clone();
                e[0] -= 1;
                for (k, x) in e.iter().enumerate() {
                    for _ in 0..*x {
                        rest.push(k);
                    }
                }
                let (a, b) = (rest[0], rest[1]);
                let mult = if a == b { int(2) } else { int(1) };
                let factor = int(term.t[0] as i64) * mult;
                cubic[a][b] += &term.coefficient * &factor;
                if a != b {
                    cubic[b][a] += &term.coefficient * &factor;
                }
            }
        }
        if cubic != self.pairing {
            return Err(Self::violation("∂0∂a∂b F does not reproduce the pairing (φ0 is not the unit)"));
        }
        let mut seen = Vec::new();
        for b in &self.base_point {
            if b.coordinate == 0 || b.coordinate <= r || b.coordinate >= n {
                return Err(Self::violation("base-point coordinates must be non-divisor, non-unit directions"));
            }
            if seen.contains(&b.coordinate) {
                return Err(Self::violation("repeated base-point coordinate"));
            }
            seen.push(b.coordinate);
            if b.scale.is_zero() {
                return Err(Self::violation("base-point scale must be nonzero"));
            }
        }
        if self.small_locus != self.base_point.is_empty() {
            return Err(Self::violation("small_locus must hold exactly when no formal base point is given"));
        }
        if self.cyclotomic_order == 0 || self.puiseux_denominator == 0 {
            return Err(Self::violation("ring orders must be positive"));
        }
        Ok(())
    }

    /// Working ring: Novikov variables Q_i, then one variable per formal base-point parameter.
    pub fn ring(&self, precision: &Rational) -> Result<Arc<Ring>, FrobeniusError> {
        let mut vars = Vec::new();
        for i in 0..self.divisor_count {
            let name = if self.divisor_count == 1 { "Q".to_string() } else { format!("Q{}", i + 1) };
            vars.push(Variable { name, weight: self.novikov_weights[i].clone(), euler_weight: self.rho[i].clone() });
        }
        for b in &self.base_point {
            vars.push(Variable { name: b.parameter.clone(), weight: Rational::one(), euler_weight: self.coordinate_weight(b.coordinate) });
        }
        Ok(Ring::new(self.cyclotomic_order, self.puiseux_denominator, vars, precision.clone())?)
    }

    /// Lower bound on the valuation of the unknown part of ∂_idx F⁰ at the base point.
    fn unknown_bound(&self, idx: &[usize]) -> Option<Rational> {
        let b = self.novikov_bound? as i64;
        let wmin = self.novikov_weights.iter().min().cloned().unwrap_or_else(Rational::one);
        let base = &wmin * int(b);
        if self.divisor_count != 1 {
            return Some(base);
        }
        let mut x = &self.rho[0] * int(b) - (int(3) - &self.conformal_dimension);
        for a in idx {
            x += self.coordinate_weight(*a);
        }
        let maxneg = self
            .base_point
            .iter()
            .map(|p| self.coordinate_weight(p.coordinate))
            .filter(|w| w.is_negative())
            .map(|w| -w)
            .max();
        match maxneg {
            Some(w) if x.is_positive() => Some(base + (x / w).ceil()),
            _ => Some(base),
        }
    }

    /// ∂_{idx} F⁰ evaluated at the base point, as a series in the working ring.
    pub fn potential_derivative(&self, ring: &Arc<Ring>, idx: &[usize]) -> MultiSeries {
        let n = self.rank();
        let r = self.divisor_count;
        let m = ring.puiseux_denominator as i64;
        let mut need = vec![0u32; n];
        for a in idx {
            need[*a] += 1;
        }
        let mut acc = MultiSeries::zero(ring);
        'terms: for term in &self.potential {
            let quantum = term.novikov.iter().any(|d| *d > 0);
            let mut coeff = term.coefficient.clone();
            let mut rem = term.t.clone();
            for k in 0..n {
                if need[k] == 0 {
                    continue;
                }
                if quantum && (1..=r).contains(&k) {
                    coeff *= int(term.novikov[k - 1] as i64).pow(need[k] as i32);
                    continue;
                }
                if rem[k] < need[k] {
                    continue 'terms;
                }
                for j in 0..need[k] {
                    coeff *= int((rem[k] - j) as i64);
                }
                rem[k] -= need[k];
            }
            if coeff.is_zero() {
                continue;
            }
            let mut exponent = vec![0i64; ring.nvars()];
            for (i, d) in term.novikov.iter().enumerate() {
                exponent[i] = *d as i64 * m;
            }
            for k in 0..n {
                if rem[k] == 0 {
                    continue;
                }
                match self.base_point.iter().position(|b| b.coordinate == k) {
                    Some(p) => {
                        coeff *= self.base_point[p].scale.pow(rem[k] as i32);
                        exponent[r + p] = rem[k] as i64 * m;
                    }
                    None => continue 'terms,
                }
            }
            acc = acc.add(&MultiSeries::monomial(ring, exponent, Cyclo::rational(coeff)));
        }
        match self.unknown_bound(idx) {
            Some(b) => acc.truncate(&b),
            None => acc,
        }
    }

    /// Value of the base-point coordinate t^k as a series (zero off the base point).
    pub fn base_coordinate(&self, ring: &Arc<Ring>, k: usize) -> MultiSeries {
        match self.base_point.iter().position(|b| b.coordinate == k) {
            Some(p) => MultiSeries::variable(ring, self.divisor_count + p).scale_rational(&self.base_point[p].scale),
            None => MultiSeries::zero(ring),
        }
    }

    pub fn pairing_matrix(&self, ring: &Arc<Ring>) -> Matrix {
        Matrix::from_rationals(ring, &self.pairing)
    }

    /// Grading operator μ = diag(½deg φ_i − ½D).
    pub fn grading(&self) -> Vec<Rational> {
        self.degrees.iter().map(|d| (d - &self.conformal_dimension) / int(2)).collect()
    }

    pub fn potential_max_degree(&self) -> Option<u32> {
        self.potential.iter().map(|t| t.novikov.iter().sum::<u32>()).max()
    }
}

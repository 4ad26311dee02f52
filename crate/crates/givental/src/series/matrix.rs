//! Dense square matrices over `MultiSeries`.

use std::sync::Arc;

use super::{Cyclo, MultiSeries, Rational, Ring, SeriesError};

#[derive(Clone, PartialEq, Debug)]
pub struct Matrix {
    dim: usize,
    entries: Vec<MultiSeries>,
}

impl Matrix {
    pub fn zero(ring: &Arc<Ring>, dim: usize) -> Self {
        Matrix { dim, entries: vec![MultiSeries::zero(ring); dim * dim] }
    }

    pub fn identity(ring: &Arc<Ring>, dim: usize) -> Self {
        let mut m = Self::zero(ring, dim);
        for i in 0..dim {
            m.set(i, i, MultiSeries::one(ring));
        }
        m
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> MultiSeries) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Matrix { dim, entries }
    }

    pub fn from_rationals(ring: &Arc<Ring>, rows: &[Vec<Rational>]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |i, j| MultiSeries::from_rational(ring, rows[i][j].clone()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ring(&self) -> &Arc<Ring> {
        self.entries[0].ring()
    }

    pub fn get(&self, i: usize, j: usize) -> &MultiSeries {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: MultiSeries) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn entries(&self) -> &[MultiSeries] {
        &self.entries
    }

    pub fn map(&self, f: impl Fn(&MultiSeries) -> MultiSeries) -> Self {
        Matrix { dim: self.dim, entries: self.entries.iter().map(f).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Matrix { dim: self.dim, entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Matrix { dim: self.dim, entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn neg(&self) -> Self {
        self.map(|x| x.neg())
    }

    pub fn scale(&self, s: &MultiSeries) -> Self {
        self.map(|x| x.mul(s))
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        self.map(|x| x.scale_rational(r))
    }

    pub fn scale_cyclo(&self, c: &Cyclo) -> Self {
        self.map(|x| x.scale(c))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        if self.dim != other.dim {
            return Err(SeriesError::DimensionMismatch);
        }
        let n = self.dim;
        let ring = self.ring().clone();
        let mut out = Self::zero(&ring, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = MultiSeries::zero(&ring);
                for k in 0..n {
                    let a = self.get(i, k);
                    let b = other.get(k, j);
                    if a.is_exactly_zero() || b.is_exactly_zero() {
                        continue;
                    }
                    acc = acc.add(&a.mul(b));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("dimension mismatch")
    }

    pub fn apply(&self, v: &[MultiSeries]) -> Vec<MultiSeries> {
        let ring = self.ring().clone();
        (0..self.dim)
            .map(|i| {
                let mut acc = MultiSeries::zero(&ring);
                for (k, x) in v.iter().enumerate() {
                    let a = self.get(i, k);
                    if !a.is_exactly_zero() && !x.is_exactly_zero() {
                        acc = acc.add(&a.mul(x));
                    }
                }
                acc
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).clone())
    }

    pub fn column(&self, j: usize) -> Vec<MultiSeries> {
        (0..self.dim).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn from_columns(cols: &[Vec<MultiSeries>]) -> Self {
        let n = cols.len();
        Self::from_fn(n, |i, j| cols[j][i].clone())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn agrees_with(&self, other: &Self) -> bool {
        self.dim == other.dim && self.entries.iter().zip(&other.entries).all(|(a, b)| a.agrees_with(b))
    }

    pub fn trace(&self) -> MultiSeries {
        let mut acc = MultiSeries::zero(self.ring());
        for i in 0..self.dim {
            acc = acc.add(self.get(i, i));
        }
        acc
    }

    /// Inverse by Gauss–Jordan elimination, pivoting on entries with a unit leading monomial
    /// of lowest valuation.
    pub fn try_inverse(&self) -> Result<Self, SeriesError> {
        let n = self.dim;
        let ring = self.ring().clone();
        let mut a = self.clone();
        let mut inv = Self::identity(&ring, n);
        for col in 0..n {
            let mut best: Option<(usize, Rational)> = None;
            for row in col..n {
                let e = a.get(row, col);
                if e.leading_monomial().is_some() {
                    let v = e.valuation().unwrap();
                    if best.as_ref().map(|(_, bv)| v < *bv).unwrap_or(true) {
                        best = Some((row, v));
                    }
                }
            }
            let (p, _) = best.ok_or(SeriesError::NotInvertible)?;
            if p != col {
                for j in 0..n {
                    let t = a.get(p, j).clone();
                    a.set(p, j, a.get(col, j).clone());
                    a.set(col, j, t);
                    let t = inv.get(p, j).clone();
                    inv.set(p, j, inv.get(col, j).clone());
                    inv.set(col, j, t);
                }
            }
            let pinv = a.get(col, col).try_inv()?;
            for j in 0..n {
                a.set(col, j, a.get(col, j).mul(&pinv));
                inv.set(col, j, inv.get(col, j).mul(&pinv));
            }
            for row in 0..n {
                if row == col || a.get(row, col).is_zero() {
                    continue;
                }
                let f = a.get(row, col).clone();
                for j in 0..n {
                    a.set(row, j, a.get(row, j).sub(&f.mul(a.get(col, j))));
                    inv.set(row, j, inv.get(row, j).sub(&f.mul(inv.get(col, j))));
                }
            }
        }
        Ok(inv)
    }

    /// Characteristic polynomial det(λ - A) coefficients c_0..c_n (λ^n has c_n = 1),
    /// by the Faddeev–LeVerrier recursion.
    pub fn characteristic_polynomial(&self) -> Vec<MultiSeries> {
        let n = self.dim;
        let ring = self.ring().clone();
        let mut coeffs = vec![MultiSeries::zero(&ring); n + 1];
        coeffs[n] = MultiSeries::one(&ring);
        let id = Self::identity(&ring, n);
        let mut mk = Self::zero(&ring, n);
        for k in 1..=n {
            // M_k = A M_{k-1} + c_{n-k+1} I ; c_{n-k} = -tr(A M_k)/k
            mk = self.mul(&mk).add(&id.scale(&coeffs[n - k + 1]));
            let t = self.mul(&mk).trace();
            coeffs[n - k] = t.scale_rational(&Rational::new((-1).into(), (k as i64).into()));
        }
        coeffs
    }

    pub fn determinant(&self) -> MultiSeries {
        let c = self.characteristic_polynomial();
        if self.dim % 2 == 0 {
            c[0].clone()
        } else {
            c[0].neg()
        }
    }
}

//! Matrix-valued series in z on an explicit window of z-powers.
//!
//! A `PowerSeries` is zero below `lo` and unknown above `hi`; an `InverseSeries`
//! is zero above `hi` and unknown below `lo`. Products report the window on which
//! the result is guaranteed exact.

use std::sync::Arc;

use super::{Matrix, MultiSeries, Ring, SeriesError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    PowerSeries,
    InverseSeries,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZMatrixSeries {
    dim: usize,
    lo: i32,
    hi: i32,
    direction: Direction,
    coeffs: Vec<Matrix>,
}

impl ZMatrixSeries {
    pub fn new(direction: Direction, lo: i32, coeffs: Vec<Matrix>) -> Self {
        assert!(!coeffs.is_empty());
        let dim = coeffs[0].dim();
        let hi = lo + coeffs.len() as i32 - 1;
        ZMatrixSeries { dim, lo, hi, direction, coeffs }
    }

    pub fn identity(ring: &Arc<Ring>, dim: usize, direction: Direction, length: usize) -> Self {
        let mut coeffs = vec![Matrix::zero(ring, dim); length];
        match direction {
            Direction::PowerSeries => coeffs[0] = Matrix::identity(ring, dim),
            Direction::InverseSeries => coeffs[length - 1] = Matrix::identity(ring, dim),
        }
        let lo = match direction {
            Direction::PowerSeries => 0,
            Direction::InverseSeries => -(length as i32 - 1),
        };
        Self::new(direction, lo, coeffs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> (i32, i32) {
        (self.lo, self.hi)
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Coefficient of z^k; zero outside the window on the exact side.
    pub fn coeff(&self, k: i32) -> Option<&Matrix> {
        if k < self.lo || k > self.hi {
            None
        } else {
            Some(&self.coeffs[(k - self.lo) as usize])
        }
    }

    pub fn ring(&self) -> &Arc<Ring> {
        self.coeffs[0].ring()
    }

    pub fn coefficients(&self) -> &[Matrix] {
        &self.coeffs
    }

    /// Matrix Cauchy product, restricted to the window where both factors are known.
    pub fn try_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        if self.dim != other.dim || self.direction != other.direction {
            return Err(SeriesError::DimensionMismatch);
        }
        let ring = self.ring().clone();
        let (lo, hi) = match self.direction {
            Direction::PowerSeries => {
                (self.lo + other.lo, (self.hi + other.lo).min(other.hi + self.lo))
            }
            Direction::InverseSeries => {
                ((self.lo + other.hi).max(other.lo + self.hi), self.hi + other.hi)
            }
        };
        let mut coeffs = Vec::new();
        for k in lo..=hi {
            let mut acc = Matrix::zero(&ring, self.dim);
            for a in self.lo..=self.hi {
                let b = k - a;
                if let (Some(x), Some(y)) = (self.coeff(a), other.coeff(b)) {
                    acc = acc.add(&x.mul(y));
                }
            }
            coeffs.push(acc);
        }
        Ok(Self::new(self.direction, lo, coeffs))
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("incompatible z-matrix series")
    }

    /// A(-z).
    pub fn negate_z(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, m)| if (self.lo + i as i32).rem_euclid(2) == 1 { m.neg() } else { m.clone() })
            .collect();
        Self::new(self.direction, self.lo, coeffs)
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.direction, self.lo, self.coeffs.iter().map(|m| m.transpose()).collect())
    }

    pub fn map(&self, f: impl Fn(&Matrix) -> Matrix) -> Self {
        Self::new(self.direction, self.lo, self.coeffs.iter().map(f).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.direction, other.direction);
        let lo = self.lo.min(other.lo);
        let hi = match self.direction {
            Direction::PowerSeries => self.hi.min(other.hi),
            Direction::InverseSeries => self.hi.max(other.hi),
        };
        let lo = match self.direction {
            Direction::PowerSeries => lo,
            Direction::InverseSeries => self.lo.max(other.lo),
        };
        let ring = self.ring().clone();
        let coeffs = (lo..=hi)
            .map(|k| {
                let z = Matrix::zero(&ring, self.dim);
                self.coeff(k).unwrap_or(&z).sub(other.coeff(k).unwrap_or(&z))
            })
            .collect();
        Self::new(self.direction, lo, coeffs)
    }

    /// Truncates to powers in [lo, hi].
    pub fn restrict(&self, lo: i32, hi: i32) -> Self {
        let lo = lo.max(self.lo);
        let hi = hi.min(self.hi);
        let coeffs = (lo..=hi).map(|k| self.coeff(k).unwrap().clone()).collect();
        Self::new(self.direction, lo, coeffs)
    }

    /// Inverse of a power series with invertible constant term.
    pub fn try_inverse(&self) -> Result<Self, SeriesError> {
        match self.direction {
            Direction::PowerSeries => {
                if self.lo != 0 {
                    return Err(SeriesError::NotInvertible);
                }
                let a0inv = self.coeffs[0].try_inverse()?;
                let ring = self.ring().clone();
                let mut out: Vec<Matrix> = vec![a0inv.clone()];
                for k in 1..=self.hi {
                    let mut acc = Matrix::zero(&ring, self.dim);
                    for j in 1..=k {
                        acc = acc.add(&self.coeffs[j as usize].mul(&out[(k - j) as usize]));
                    }
                    out.push(a0inv.mul(&acc).neg());
                }
                Ok(Self::new(Direction::PowerSeries, 0, out))
            }
            Direction::InverseSeries => {
                if self.hi != 0 {
                    return Err(SeriesError::NotInvertible);
                }
                let flipped: Vec<Matrix> = self.coeffs.iter().rev().cloned().collect();
                let inv = Self::new(Direction::PowerSeries, 0, flipped).try_inverse()?;
                let back: Vec<Matrix> = inv.coeffs.iter().rev().cloned().collect();
                Ok(Self::new(Direction::InverseSeries, self.lo, back))
            }
        }
    }

    /// Every coefficient is zero (to known order).
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|m| m.is_zero())
    }

    /// Entry (i,j) of the z^k coefficient.
    pub fn entry(&self, k: i32, i: usize, j: usize) -> Option<&MultiSeries> {
        self.coeff(k).map(|m| m.get(i, j))
    }
}

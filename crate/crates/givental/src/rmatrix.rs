//! The R-matrix: S = ΨR e^{U/z} solving the z-direction of the Dubrovin connection.

use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigInt;
use thiserror::Error;

use crate::frobenius::{conjugated_grading, CanonicalFrame, QuantumAlgebra};
use crate::series::{Direction, Matrix, MultiSeries, Rational, Ring, SeriesError, ZMatrixSeries};

#[derive(Debug, Error)]
pub enum RMatrixError {
    #[error("canonical coordinates u^{0} and u^{1} coincide to leading order")]
    NotSemisimple(usize, usize),
    #[error("order budget exceeded: {0}")]
    OrderBudgetExceeded(String),
    #[error("cannot parse R-matrix snapshot: {0}")]
    Parse(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// R(z) = Σ_k R_k z^k with R_0 = Id.
#[derive(Clone, Debug, PartialEq)]
pub struct RMatrix {
    pub coeffs: Vec<Matrix>,
}

fn rational(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

impl RMatrix {
    pub fn identity(ring: &Arc<Ring>, dim: usize, order: usize) -> Self {
        let mut coeffs = vec![Matrix::zero(ring, dim); order + 1];
        coeffs[0] = Matrix::identity(ring, dim);
        RMatrix { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].dim()
    }

    pub fn ring(&self) -> &Arc<Ring> {
        self.coeffs[0].ring()
    }

    pub fn as_series(&self) -> ZMatrixSeries {
        ZMatrixSeries::new(Direction::PowerSeries, 0, self.coeffs.clone())
    }

    /// Conjugates by a signed permutation: R ↦ Pᵀ R P.
    pub fn conjugate(&self, p: &Matrix) -> Self {
        RMatrix { coeffs: self.coeffs.iter().map(|m| p.transpose().mul(m).mul(p)).collect() }
    }

    /// Per-order dump in canonical text.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, m) in self.coeffs.iter().enumerate() {
            writeln!(out, "order {k}").unwrap();
            for i in 0..m.dim() {
                for j in 0..m.dim() {
                    writeln!(out, "{i} {j} {}", m.get(i, j).to_canonical()).unwrap();
                }
            }
        }
        out
    }

    /// Reads the output of `dump` back over `ring`.
    pub fn parse_dump(ring: &Arc<Ring>, text: &str) -> Result<Self, RMatrixError> {
        let mut blocks: Vec<Vec<(usize, usize, MultiSeries)>> = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let bad = || RMatrixError::Parse(line.to_string());
            if let Some(k) = line.strip_prefix("order ") {
                if k.trim().parse::<usize>().map_err(|_| bad())? != blocks.len() {
                    return Err(bad());
                }
                blocks.push(Vec::new());
                continue;
            }
            let mut parts = line.splitn(3, ' ');
            let i: usize = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let j: usize = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let v = MultiSeries::parse(ring, parts.next().ok_or_else(bad)?).map_err(|_| bad())?;
            blocks.last_mut().ok_or_else(bad)?.push((i, j, v));
        }
        let dim = blocks.first().map(|b| (b.len() as f64).sqrt() as usize).unwrap_or(0);
        if dim == 0 {
            return Err(RMatrixError::Parse("empty snapshot".into()));
        }
        let mut coeffs = Vec::new();
        for (k, block) in blocks.into_iter().enumerate() {
            if block.len() != dim * dim {
                return Err(RMatrixError::Parse(format!("order {k} has {} entries, expected {}", block.len(), dim * dim)));
            }
            let mut m = Matrix::zero(ring, dim);
            for (i, j, v) in block {
                if i >= dim || j >= dim {
                    return Err(RMatrixError::Parse(format!("entry ({i},{j}) outside a {dim}x{dim} matrix")));
                }
                m.set(i, j, v);
            }
            coeffs.push(m);
        }
        Ok(RMatrix { coeffs })
    }
}

/// Solves z R' + z⁻¹[U, R] + V R = 0 order by order, V = Ψ⁻¹μΨ.
///
/// Off-diagonal entries of R_{k+1} come from the z^k equation; diagonal entries from the
/// diagonal part of the z^{k+1} equation.
pub fn solve_r(frame: &CanonicalFrame, alg: &QuantumAlgebra, order: usize) -> Result<RMatrix, RMatrixError> {
    let n = alg.rank();
    let ring = frame.ring.clone();
    let v = conjugated_grading(alg, frame);
    let mut inv_diff = vec![vec![MultiSeries::zero(&ring); n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                inv_diff[i][j] = frame.canonical[i]
                    .sub(&frame.canonical[j])
                    .try_inv()
                    .map_err(|_| RMatrixError::NotSemisimple(i, j))?;
            }
        }
    }
    let mut coeffs = vec![Matrix::identity(&ring, n)];
    for k in 0..order {
        let prev = &coeffs[k];
        let shifted = v.mul(prev).add(&prev.scale_rational(&rational(k as i64)));
        let mut next = Matrix::zero(&ring, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    next.set(i, j, shifted.get(i, j).mul(&inv_diff[i][j]).neg());
                }
            }
        }
        let factor = Rational::new(BigInt::from(-1), BigInt::from(k as i64 + 1));
        for i in 0..n {
            let mut acc = MultiSeries::zero(&ring);
            for j in 0..n {
                if j != i && !v.get(i, j).is_zero() {
                    acc = acc.add(&v.get(i, j).mul(next.get(j, i)));
                }
            }
            next.set(i, i, acc.scale_rational(&factor));
        }
        coeffs.push(next);
    }
    Ok(RMatrix { coeffs })
}

/// Coefficients of R(−z)ᵀ R(z) − Id through z^order.
pub fn unitarity_residual(r: &RMatrix) -> Vec<Matrix> {
    let ring = r.ring().clone();
    let n = r.dim();
    let order = r.order();
    (0..=order)
        .map(|k| {
            let mut acc = Matrix::zero(&ring, n);
            for a in 0..=k {
                let term = r.coeffs[a].transpose().mul(&r.coeffs[k - a]);
                acc = if a % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            if k == 0 {
                acc = acc.sub(&Matrix::identity(&ring, n));
            }
            acc
        })
        .collect()
}

pub fn check_unitary(r: &RMatrix) -> bool {
    unitarity_residual(r).iter().all(|m| m.is_zero())
}

/// Coefficients of z∂_z R + E(R), with E acting through the Euler weights of the ring variables.
pub fn homogeneity_residual(r: &RMatrix) -> Vec<Matrix> {
    r.coeffs
        .iter()
        .enumerate()
        .map(|(k, m)| m.map(|x| x.euler_derivative().add(&x.scale_rational(&rational(k as i64)))))
        .collect()
}

pub fn check_homogeneous(r: &RMatrix) -> bool {
    homogeneity_residual(r).iter().all(|m| m.is_zero())
}

/// Coefficients of z R' + z⁻¹[U, R] + V R through the computed order.
pub fn ode_residual(r: &RMatrix, frame: &CanonicalFrame, alg: &QuantumAlgebra) -> Vec<Matrix> {
    let n = r.dim();
    let ring = r.ring().clone();
    let v = conjugated_grading(alg, frame);
    let u = Matrix::from_fn(n, |i, j| if i == j { frame.canonical[i].clone() } else { MultiSeries::zero(&ring) });
    (0..r.order())
        .map(|k| {
            let rk = &r.coeffs[k];
            let next = &r.coeffs[k + 1];
            let comm = u.mul(next).sub(&next.mul(&u));
            rk.scale_rational(&rational(k as i64)).add(&comm).add(&v.mul(rk))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius::{canonical_frame, FrobeniusSpec};

    fn setup(name: &str, precision: i64) -> (QuantumAlgebra, CanonicalFrame) {
        let spec = FrobeniusSpec::shipped(name).unwrap();
        let ring = spec.ring(&rational(precision)).unwrap();
        let alg = QuantumAlgebra::new(&spec, &ring).unwrap();
        let frame = canonical_frame(&alg).unwrap();
        (alg, frame)
    }

    #[test]
    fn point_r_is_identity() {
        let (alg, frame) = setup("point", 4);
        let r = solve_r(&frame, &alg, 6).unwrap();
        assert_eq!(r, RMatrix::identity(&alg.ring, 1, 6));
        assert!(check_homogeneous(&r));
    }

    #[test]
    fn snapshot_round_trip() {
        let (alg, frame) = setup("p1", 6);
        let r = solve_r(&frame, &alg, 3).unwrap();
        assert_eq!(RMatrix::parse_dump(&alg.ring, &r.dump()).unwrap(), r);
        assert!(RMatrix::parse_dump(&alg.ring, "order 0\n0 0 1\n0 1 0\n").is_err());
    }

    #[test]
    fn p1_first_order_satisfies_ode() {
        let (alg, frame) = setup("p1", 6);
        let r = solve_r(&frame, &alg, 4).unwrap();
        assert!(!r.coeffs[1].is_zero());
        for m in ode_residual(&r, &frame, &alg) {
            assert!(m.is_zero());
        }
        assert!(check_unitary(&r));
        assert!(check_homogeneous(&r));
    }

    #[test]
    fn unitarity_detects_non_symmetric_first_order() {
        let ring = Ring::constants(1);
        let mut r = RMatrix::identity(&ring, 2, 1);
        r.coeffs[1] = Matrix::from_rationals(&ring, &[vec![rational(0), rational(1)], vec![rational(0), rational(0)]]);
        let res = unitarity_residual(&r);
        assert!(res[0].is_zero());
        assert_eq!(res[1], r.coeffs[1].sub(&r.coeffs[1].transpose()));
        assert!(!check_unitary(&r));
    }

    #[test]
    fn perturbed_r_breaks_homogeneity() {
        let (alg, frame) = setup("p1", 6);
        let mut r = solve_r(&frame, &alg, 3).unwrap();
        let bump = Matrix::identity(&alg.ring, 2).scale_rational(&rational(1));
        r.coeffs[1] = r.coeffs[1].add(&bump);
        assert!(!check_homogeneous(&r));
    }

    #[test]
    fn p2_unitary_through_six() {
        let (alg, frame) = setup("p2", 8);
        let r = solve_r(&frame, &alg, 6).unwrap();
        assert!(check_unitary(&r));
        assert!(check_homogeneous(&r));
    }

    #[test]
    fn a2_unitary() {
        let (alg, frame) = setup("a2", 8);
        let r = solve_r(&frame, &alg, 8).unwrap();
        assert!(check_unitary(&r));
        assert!(check_homogeneous(&r));
    }

    #[test]
    fn reordering_conjugates_by_permutation() {
        let (alg, frame) = setup("p1", 6);
        let r = solve_r(&frame, &alg, 5).unwrap();
        let mut swapped = frame.clone();
        swapped.canonical.swap(0, 1);
        swapped.idempotents.swap(0, 1);
        swapped.normalizations.swap(0, 1);
        swapped.sqrt_normalizations.swap(0, 1);
        let cols: Vec<Vec<MultiSeries>> = vec![frame.psi.column(1), frame.psi.column(0).iter().map(|x| x.neg()).collect()];
        swapped.psi = Matrix::from_columns(&cols);
        let r2 = solve_r(&swapped, &alg, 5).unwrap();
        let ring = alg.ring.clone();
        let p = Matrix::from_rationals(&ring, &[vec![rational(0), rational(-1)], vec![rational(1), rational(0)]]);
        assert_eq!(r2, r.conjugate(&p));
    }
}

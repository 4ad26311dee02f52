//! Semisimplicity certificates and the canonical frame.

use std::sync::Arc;

use num_bigint::BigInt;

use super::{FrobeniusError, QuantumAlgebra, Vector};
use crate::series::{Cyclo, Matrix, MultiSeries, Rational, Ring};

#[derive(Clone, Debug)]
pub struct SemisimplicityCertificate {
    pub semisimple: bool,
    /// Leading monomials of the eigenvalues of E∗, in canonical order.
    pub leading: Vec<MultiSeries>,
}

#[derive(Clone, Debug)]
pub struct CanonicalFrame {
    pub ring: Arc<Ring>,
    /// Canonical coordinates u^i at the base point.
    pub canonical: Vec<MultiSeries>,
    pub idempotents: Vec<Vector>,
    /// Δ^i = 1/g(e_i, e_i).
    pub normalizations: Vec<MultiSeries>,
    pub sqrt_normalizations: Vec<MultiSeries>,
    /// Columns √Δ^i e_i.
    pub psi: Matrix,
}

fn poly_eval(coeffs: &[MultiSeries], x: &MultiSeries) -> MultiSeries {
    let mut acc = MultiSeries::zero(x.ring());
    for c in coeffs.iter().rev() {
        acc = acc.mul(x).add(c);
    }
    acc
}

fn poly_derivative(coeffs: &[MultiSeries]) -> Vec<MultiSeries> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, c)| c.scale_rational(&Rational::from_integer(BigInt::from(j as i64))))
        .collect()
}

fn sort_key(x: &MultiSeries) -> (Vec<i64>, String) {
    match x.leading_monomial() {
        Some((e, c)) => (e, c.to_canonical()),
        None => (vec![], String::new()),
    }
}

/// Leading eigenvalues of E∗ from the Newton polygon of its characteristic polynomial.
pub fn semisimplicity_certificate(alg: &QuantumAlgebra) -> Result<SemisimplicityCertificate, FrobeniusError> {
    let ring = alg.ring.clone();
    let coeffs = alg.euler.characteristic_polynomial();
    let n = alg.rank();
    let mut zero_mult = 0;
    while zero_mult < n && coeffs[zero_mult].is_zero() {
        if !coeffs[zero_mult].is_exact() {
            return Err(FrobeniusError::Inconclusive("characteristic polynomial coefficient vanishes only to known order".into()));
        }
        zero_mult += 1;
    }
    if zero_mult > 1 {
        return Ok(SemisimplicityCertificate { semisimple: false, leading: vec![MultiSeries::zero(&ring); zero_mult] });
    }
    let mut points: Vec<(usize, Rational, Vec<i64>, Cyclo)> = Vec::new();
    for (j, c) in coeffs.iter().enumerate().skip(zero_mult) {
        if c.is_zero() {
            continue;
        }
        let (e, lc) = c
            .leading_monomial()
            .ok_or_else(|| FrobeniusError::Inconclusive(format!("coefficient of λ^{j} has no unique leading monomial")))?;
        points.push((j, c.exponent_valuation(&e), e, lc));
    }
    let mut leading = Vec::new();
    if zero_mult == 1 {
        leading.push(MultiSeries::zero(&ring));
    }
    let mut pos = 0;
    while pos + 1 < points.len() {
        let (j0, v0) = (points[pos].0, points[pos].1.clone());
        let mut best = pos + 1;
        let mut best_slope: Option<Rational> = None;
        for k in pos + 1..points.len() {
            let slope = (&points[k].1 - &v0) / Rational::from_integer(BigInt::from((points[k].0 - j0) as i64));
            match &best_slope {
                Some(s) if slope > *s => {}
                Some(s) if slope == *s => best = k,
                _ => {
                    best = k;
                    best_slope = Some(slope);
                }
            }
        }
        if best != pos + 1 {
            let slope = best_slope.unwrap();
            let collinear = (pos + 1..best).any(|k| {
                (&points[k].1 - &v0) / Rational::from_integer(BigInt::from((points[k].0 - j0) as i64)) == slope
            });
            if collinear {
                return Err(FrobeniusError::Inconclusive("Newton polygon segment with interior points".into()));
            }
        }
        let k = (points[best].0 - j0) as u32;
        // λ^k = −lead(c_j0)/lead(c_j1)
        let ratio = points[pos].3.div(&points[best].3).expect("nonzero leading coefficient").neg();
        let exps: Vec<i64> = points[pos].2.iter().zip(&points[best].2).map(|(a, b)| a - b).collect();
        if exps.iter().any(|x| x % k as i64 != 0) {
            return Err(FrobeniusError::Inconclusive(format!("root exponent {exps:?}/{k} needs a larger Puiseux denominator")));
        }
        let roots = ratio.all_nth_roots(k);
        if roots.len() != k as usize {
            return Err(FrobeniusError::Inconclusive(format!("coefficient ring lacks the {k}-th roots of {ratio}")));
        }
        let e: Vec<i64> = exps.iter().map(|x| x / k as i64).collect();
        for c in roots {
            leading.push(MultiSeries::monomial(&ring, e.clone(), c));
        }
        pos = best;
    }
    if leading.len() != n {
        return Err(FrobeniusError::Inconclusive("Newton polygon does not account for every eigenvalue".into()));
    }
    leading.sort_by_key(sort_key);
    let distinct = leading.windows(2).all(|w| w[0] != w[1]);
    Ok(SemisimplicityCertificate { semisimple: distinct, leading })
}

/// Lifts a leading root of the characteristic polynomial by Newton iteration.
fn newton_lift(coeffs: &[MultiSeries], start: &MultiSeries) -> Result<MultiSeries, FrobeniusError> {
    let deriv = poly_derivative(coeffs);
    let mut x = start.clone();
    let mut last: Option<Rational> = None;
    for _ in 0..64 {
        let value = poly_eval(coeffs, &x);
        if value.is_zero() {
            return Ok(x);
        }
        let v = value.valuation().unwrap();
        if let Some(l) = &last {
            if v <= *l {
                return Err(FrobeniusError::ConvergenceStall);
            }
        }
        last = Some(v);
        let slope = poly_eval(&deriv, &x);
        x = x.sub(&value.try_div(&slope)?);
    }
    Err(FrobeniusError::ConvergenceStall)
}

pub fn canonical_frame(alg: &QuantumAlgebra) -> Result<CanonicalFrame, FrobeniusError> {
    let cert = semisimplicity_certificate(alg)?;
    if !cert.semisimple {
        return Err(FrobeniusError::NotSemisimple);
    }
    let ring = alg.ring.clone();
    let n = alg.rank();
    let coeffs = alg.euler.characteristic_polynomial();
    let canonical: Vec<MultiSeries> =
        cert.leading.iter().map(|l| newton_lift(&coeffs, l)).collect::<Result<_, _>>()?;
    let mut idempotents = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = alg.basis_vector(0);
        for j in 0..n {
            if j == i {
                continue;
            }
            let denom = canonical[i].sub(&canonical[j]).try_inv()?;
            let ev = alg.euler.apply(&v);
            v = ev.iter().zip(&v).map(|(a, b)| a.sub(&b.mul(&canonical[j])).mul(&denom)).collect();
        }
        idempotents.push(v);
    }
    let mut normalizations = Vec::with_capacity(n);
    let mut sqrt_normalizations = Vec::with_capacity(n);
    for e in &idempotents {
        let d = alg.pair(e, e).try_inv()?;
        sqrt_normalizations.push(d.try_sqrt()?);
        normalizations.push(d);
    }
    let cols: Vec<Vector> = idempotents
        .iter()
        .zip(&sqrt_normalizations)
        .map(|(e, s)| e.iter().map(|x| x.mul(s)).collect())
        .collect();
    let psi = Matrix::from_columns(&cols);
    Ok(CanonicalFrame { ring, canonical, idempotents, normalizations, sqrt_normalizations, psi })
}

/// Named pass/fail results for the frame identities.
pub fn frame_checks(alg: &QuantumAlgebra, frame: &CanonicalFrame) -> Vec<(String, bool)> {
    let n = alg.rank();
    let mut out = Vec::new();
    let mut idem = true;
    for i in 0..n {
        for j in 0..n {
            let p = alg.multiply(&frame.idempotents[i], &frame.idempotents[j]);
            let ok = p.iter().enumerate().all(|(k, x)| {
                if i == j {
                    x.agrees_with(&frame.idempotents[i][k])
                } else {
                    x.is_zero()
                }
            });
            idem &= ok;
        }
    }
    out.push(("idempotents".to_string(), idem));
    let mut sum = vec![MultiSeries::zero(&frame.ring); n];
    for e in &frame.idempotents {
        sum = sum.iter().zip(e).map(|(a, b)| a.add(b)).collect();
    }
    let unit = alg.basis_vector(0);
    out.push(("partition_of_unity".to_string(), sum.iter().zip(&unit).all(|(a, b)| a.agrees_with(b))));
    let eigen = (0..n).all(|i| {
        let ev = alg.euler.apply(&frame.idempotents[i]);
        ev.iter().zip(&frame.idempotents[i]).all(|(a, b)| a.agrees_with(&b.mul(&frame.canonical[i])))
    });
    out.push(("euler_eigenvectors".to_string(), eigen));
    let ortho = frame.psi.transpose().mul(&alg.pairing).mul(&frame.psi);
    out.push(("psi_orthonormal".to_string(), ortho.agrees_with(&Matrix::identity(&frame.ring, n))));
    out
}

/// Ψ⁻¹ = Ψᵀ g.
pub fn psi_inverse(alg: &QuantumAlgebra, frame: &CanonicalFrame) -> Matrix {
    frame.psi.transpose().mul(&alg.pairing)
}

/// V = Ψ⁻¹ μ Ψ.
pub fn conjugated_grading(alg: &QuantumAlgebra, frame: &CanonicalFrame) -> Matrix {
    psi_inverse(alg, frame).mul(&alg.grading_matrix()).mul(&frame.psi)
}

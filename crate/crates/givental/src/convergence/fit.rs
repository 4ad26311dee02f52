//! Log-linear fits of coefficient growth: ‖M_{m,i}‖ ≤ A C^{|m|+i}/i! for the inverse fundamental
//! solution, and |coefficient| ≤ K ε^{−n−|d|} ∏ C^{i_k}/i_k! for a correlator store.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::One;

use super::ConvergenceError;
use crate::fock::{Bounds, CorrelatorStore, Key};
use crate::potentials::FundamentalSolution;
use crate::series::{MultiSeries, Rational, Ring};

fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|x| (x as f64).ln()).sum()
}

/// Least squares for y ≈ X·β through the normal equations with a tiny ridge; the flag reports
/// whether X has full column rank.
fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, bool) {
    let p = rows[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, yi) in rows.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += row[i] * row[j];
            }
            a[i][p] += row[i] * yi;
        }
    }
    let scale = (0..p).map(|i| a[i][i]).fold(0.0, f64::max).max(1.0);
    let diag: Vec<f64> = (0..p).map(|i| a[i][i].max(f64::MIN_POSITIVE)).collect();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += 1e-10 * scale;
    }
    let mut full_rank = true;
    for col in 0..p {
        let pivot = (col..p).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, pivot);
        if a[col][col].abs() < 1e-7 * diag[col] {
            full_rank = false;
        }
        for r in 0..p {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=p {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    ((0..p).map(|i| a[i][p] / a[i][i]).collect(), full_rank)
}

/// ‖M_{m,i}‖ ≤ A C^{|m|+i}/i!, with C from a regression over all orders and A from the
/// lower half of the orders; `max_violation` is measured on the upper half.
#[derive(Clone, Debug)]
pub struct CoefficientFit {
    pub samples: usize,
    pub degenerate: bool,
    pub log_a: f64,
    pub log_c: f64,
    /// max of log‖M_{m,i}‖ + log i! − log A − (|m|+i) log C over the held-out orders.
    pub max_violation: f64,
}

pub fn m_coefficient_bound_fit(l: &FundamentalSolution) -> Result<CoefficientFit, ConvergenceError> {
    let mut norms: BTreeMap<(i64, usize), (f64, f64)> = BTreeMap::new();
    for (i, m) in l.inverse.iter().enumerate() {
        for entry in m.entries() {
            let ring = entry.ring().clone();
            let den = ring.puiseux_denominator as f64;
            for (e, c) in entry.terms() {
                let size: i64 = e.iter().sum();
                let slot = norms.entry((size, i)).or_insert((size as f64 / den, 0.0));
                slot.1 = slot.1.max(c.abs_f64());
            }
        }
    }
    let points: Vec<(f64, f64)> =
        norms.iter().filter(|(_, (_, v))| *v > 0.0).map(|(&(_, i), &(size, v))| (size + i as f64, v.ln() + ln_factorial(i as u32))).collect();
    if points.is_empty() {
        return Err(ConvergenceError::InsufficientData("no nonzero coefficients".into()));
    }
    let distinct = points.iter().map(|p| p.0.to_bits()).collect::<std::collections::BTreeSet<_>>().len();
    if distinct < 2 {
        return Ok(CoefficientFit { samples: points.len(), degenerate: true, log_a: points[0].1, log_c: 0.0, max_violation: 0.0 });
    }
    let rows: Vec<Vec<f64>> = points.iter().map(|p| vec![1.0, p.0]).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (beta, _) = least_squares(&rows, &ys);
    let log_c = beta[1].max(0.0);
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    let split = xs[xs.len() / 2];
    let envelope = |keep: &dyn Fn(f64) -> bool| {
        points.iter().filter(|p| keep(p.0)).map(|p| p.1 - p.0 * log_c).fold(f64::NEG_INFINITY, f64::max)
    };
    let log_a = envelope(&|x| x <= split);
    let upper = envelope(&|x| x > split);
    let max_violation = if upper.is_finite() { upper - log_a } else { 0.0 };
    Ok(CoefficientFit { samples: points.len(), degenerate: false, log_a, log_c, max_violation })
}

/// Regression of log|coefficient| + Σ log i_k! − log(symmetry) against (n + |d|, Σ i_k).
#[derive(Clone, Debug)]
pub struct RadiusFit {
    pub genus: u32,
    pub samples: usize,
    pub log_epsilon: f64,
    pub log_c: f64,
    pub log_k: f64,
    /// Whether (n + |d|) and Σ i_k vary independently in the sample.
    pub identifiable: bool,
    pub max_residual: f64,
    pub rms_residual: f64,
    pub r_squared: f64,
    /// Largest residual on the upper half of the sample when fitted on the lower half.
    pub extrapolation_residual: f64,
    pub divergent: bool,
    /// (Σ i_k, weighted log-coefficient) pairs for plotting.
    pub profile: Vec<(u32, f64)>,
}

struct Sample {
    size: f64,
    psi: f64,
    y: f64,
}

fn samples(store: &CorrelatorStore, genus: u32) -> Vec<Sample> {
    let den = store.ring.puiseux_denominator as f64;
    let mut out = Vec::new();
    for (key, value) in store.entries().iter().filter(|(k, _)| k.genus == genus) {
        let mut symmetry = 0.0;
        let mut run = 1u32;
        for w in key.slots.windows(2) {
            if w[0] == w[1] {
                run += 1;
                symmetry += (run as f64).ln();
            } else {
                run = 1;
            }
        }
        let psi: u32 = key.psi_total();
        let weights: f64 = key.slots.iter().map(|s| ln_factorial(s.psi)).sum();
        for (e, c) in value.terms() {
            let a = c.abs_f64();
            if a == 0.0 {
                continue;
            }
            let degree: f64 = e.iter().map(|&x| x as f64 / den).sum();
            out.push(Sample { size: key.len() as f64 + degree, psi: psi as f64, y: a.ln() - symmetry + weights });
        }
    }
    out
}

fn fit(samples: &[&Sample]) -> (Vec<f64>, bool) {
    let rows: Vec<Vec<f64>> = samples.iter().map(|s| vec![1.0, s.size, s.psi]).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.y).collect();
    least_squares(&rows, &ys)
}

fn residual(beta: &[f64], s: &Sample) -> f64 {
    s.y - (beta[0] + beta[1] * s.size + beta[2] * s.psi)
}

/// Empirical (ε, C) for the coefficient bound of one genus of a store. A store is flagged
/// divergent when the lower-half fit misses the upper half by more than max(2, 3×) its own
/// largest residual, in natural-log units.
pub fn nf_radius_estimate(store: &CorrelatorStore, genus: u32) -> Result<RadiusFit, ConvergenceError> {
    let all = samples(store, genus);
    if all.len() < 3 {
        return Err(ConvergenceError::InsufficientData(format!("{} nonzero coefficients in genus {genus}", all.len())));
    }
    let refs: Vec<&Sample> = all.iter().collect();
    let (beta, identifiable) = fit(&refs);
    let residuals: Vec<f64> = all.iter().map(|s| residual(&beta, s)).collect();
    let max_residual = residuals.iter().map(|r| r.abs()).fold(0.0, f64::max);
    let rms_residual = (residuals.iter().map(|r| r * r).sum::<f64>() / all.len() as f64).sqrt();
    let mean = all.iter().map(|s| s.y).sum::<f64>() / all.len() as f64;
    let total: f64 = all.iter().map(|s| (s.y - mean).powi(2)).sum();
    let r_squared = if total > 0.0 { 1.0 - residuals.iter().map(|r| r * r).sum::<f64>() / total } else { 1.0 };
    let mut order: Vec<f64> = all.iter().map(|s| s.size + s.psi).collect();
    order.sort_by(f64::total_cmp);
    let split = order[order.len() / 2];
    let lower: Vec<&Sample> = all.iter().filter(|s| s.size + s.psi <= split).collect();
    let upper: Vec<&Sample> = all.iter().filter(|s| s.size + s.psi > split).collect();
    let (extrapolation_residual, divergent) = if lower.len() >= 3 && !upper.is_empty() {
        let (b, _) = fit(&lower);
        let inside = lower.iter().map(|s| residual(&b, s).abs()).fold(0.0, f64::max);
        let outside = upper.iter().map(|s| residual(&b, s)).fold(0.0, f64::max);
        (outside, outside > (3.0 * inside).max(2.0))
    } else {
        (0.0, false)
    };
    let profile = all.iter().map(|s| (s.psi as u32, s.y)).collect();
    Ok(RadiusFit {
        genus,
        samples: all.len(),
        log_epsilon: -beta[1],
        log_c: beta[2],
        log_k: beta[0],
        identifiable,
        max_residual,
        rms_residual,
        r_squared,
        extrapolation_residual,
        divergent,
        profile,
    })
}

/// A one-dimensional store with ⟨τ_{i_1}⋯τ_{i_n}⟩_g = ((Σ i_k)!)², far outside every polydisc.
pub fn factorial_store(genus: u32, insertions: usize, psi: u32) -> CorrelatorStore {
    let ring = Ring::new(1, 1, vec![], Rational::one()).expect("constant ring");
    let mut insertions_per_genus = vec![0; genus as usize + 1];
    insertions_per_genus[genus as usize] = insertions;
    let bounds = Bounds { genus, insertions: insertions_per_genus, psi };
    let mut store = CorrelatorStore::new(&ring, 1, bounds);
    for n in 1..=insertions {
        for slots in crate::fock::store::label_multisets(n, 1, n as i64 * psi as i64, psi) {
            let total: u32 = slots.iter().map(|s| s.psi).sum();
            let f: BigInt = (1..=total as u64).map(BigInt::from).product();
            store.insert(Key { genus, slots }, MultiSeries::from_rational(&ring, Rational::from_integer(&f * &f)));
        }
    }
    store
}

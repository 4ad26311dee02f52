//! Hilbert norms ‖a‖_n on Laurent series in z and the product estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ConvergenceError;

/// A finite Laurent polynomial Σ_{j=j_min}^{j_max} a_j z^j with floating coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSample {
    pub j_min: i32,
    pub coeffs: Vec<f64>,
}

impl LaurentSample {
    pub fn new(j_min: i32, coeffs: Vec<f64>) -> Self {
        LaurentSample { j_min, coeffs }
    }

    pub fn monomial(j: i32, c: f64) -> Self {
        LaurentSample { j_min: j, coeffs: vec![c] }
    }

    pub fn j_max(&self) -> i32 {
        self.j_min + self.coeffs.len() as i32 - 1
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(k, &c)| (self.j_min + k as i32, c))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (k, b) in other.coeffs.iter().enumerate() {
                coeffs[i + k] += a * b;
            }
        }
        LaurentSample { j_min: self.j_min + other.j_min, coeffs }
    }

    /// [a]₊, the part with j ≥ 0.
    pub fn plus(&self) -> Self {
        self.window(0, i32::MAX)
    }

    /// [a]₋, the part with j < 0.
    pub fn minus(&self) -> Self {
        self.window(i32::MIN, -1)
    }

    fn window(&self, lo: i32, hi: i32) -> Self {
        let kept: Vec<(i32, f64)> = self.terms().filter(|(j, _)| (lo..=hi).contains(j)).collect();
        match kept.first() {
            None => LaurentSample { j_min: 0, coeffs: vec![] },
            Some((j0, _)) => LaurentSample { j_min: *j0, coeffs: kept.iter().map(|(_, c)| *c).collect() },
        }
    }
}

/// 1/|Γ(½ + j)| by the recurrences Γ(x+1) = xΓ(x) from Γ(½) = √π.
pub fn reciprocal_gamma_half(j: i32) -> f64 {
    let mut r = 1.0 / std::f64::consts::PI.sqrt();
    if j >= 0 {
        for k in 0..j {
            r /= 0.5 + k as f64;
        }
    } else {
        for k in 1..=(-j) {
            r *= 0.5 - k as f64;
        }
    }
    r.abs()
}

/// ‖a‖_n = (Σ |a_j|² e^{2nj} / |Γ(½+j)|²)^{1/2}.
pub fn norm_n(a: &LaurentSample, n: f64) -> f64 {
    a.terms()
        .map(|(j, c)| {
            let w = c * reciprocal_gamma_half(j) * (n * j as f64).exp();
            w * w
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Debug, Default)]
pub struct ProductReport {
    pub trials: usize,
    pub inequalities_checked: usize,
    /// Largest ratio of left side to right side over all checks.
    pub worst_ratio: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ProductTestConfig {
    pub trials: usize,
    pub seed: u64,
    /// Coefficients live in [−window, window].
    pub window: i32,
    pub levels: (i32, i32),
}

impl Default for ProductTestConfig {
    fn default() -> Self {
        ProductTestConfig { trials: 1000, seed: 7, window: 8, levels: (2, 6) }
    }
}

/// Random coefficients scaled by |Γ(½+j)|e^{−κj} so that every term contributes comparably to some norm.
fn random_sample(rng: &mut ChaCha8Rng, lo: i32, hi: i32, edge: bool) -> LaurentSample {
    let kappa: f64 = rng.gen_range(-3.0..3.0);
    let coeffs = (lo..=hi)
        .map(|j| {
            if edge && j != lo && j != hi {
                return 0.0;
            }
            let u: f64 = rng.gen_range(-1.0..1.0);
            u * (-kappa * j as f64).exp() / reciprocal_gamma_half(j)
        })
        .collect();
    LaurentSample { j_min: lo, coeffs }
}

fn check(report: &mut ProductReport, label: &str, lhs: f64, rhs: f64) -> Result<(), ConvergenceError> {
    report.inequalities_checked += 1;
    if rhs > 0.0 {
        report.worst_ratio = report.worst_ratio.max(lhs / rhs);
    }
    if lhs > rhs * (1.0 + 1e-12) {
        return Err(ConvergenceError::CounterexampleFound(format!("{label}: {lhs:e} > {rhs:e}")));
    }
    Ok(())
}

/// Checks both product inequalities with constant 5, and the constant-20 form for a ∈ C{{z⁻¹}},
/// b ∈ C{{z}}, on random pairs; a quarter of the pairs put all their weight on the window edges.
pub fn product_estimate_test(config: &ProductTestConfig) -> Result<ProductReport, ConvergenceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut report = ProductReport { trials: config.trials, ..Default::default() };
    let w = config.window;
    for trial in 0..config.trials {
        let edge = trial % 4 == 3;
        let a = random_sample(&mut rng, -w, w, edge);
        let b = random_sample(&mut rng, -w, w, edge);
        let neg = random_sample(&mut rng, -w, 0, edge);
        let pos = random_sample(&mut rng, 0, w, edge);
        let ab = a.mul(&b);
        let np = neg.mul(&pos);
        for n in config.levels.0..=config.levels.1 {
            let n = n as f64;
            let sym = |x: &LaurentSample| norm_n(x, n + 2.0) + norm_n(x, n - 2.0);
            let bound = 5.0 * sym(&a) * sym(&b);
            check(&mut report, "plus", norm_n(&ab.plus(), n - 1.0), bound)?;
            check(&mut report, "minus", norm_n(&ab.minus(), n + 1.0), bound)?;
            let bound20 = 20.0 * norm_n(&neg, n - 2.0) * norm_n(&pos, n + 2.0);
            check(&mut report, "plus/20", norm_n(&np.plus(), n - 1.0), bound20)?;
            check(&mut report, "minus/20", norm_n(&np.minus(), n + 1.0), bound20)?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_linear_norms() {
        let pi_sqrt = std::f64::consts::PI.sqrt();
        for n in 0..5 {
            assert!((norm_n(&LaurentSample::monomial(0, 1.0), n as f64) - 1.0 / pi_sqrt).abs() < 1e-15);
        }
        assert!((norm_n(&LaurentSample::monomial(1, 1.0), 0.0) - 2.0 / pi_sqrt).abs() < 1e-15);
    }

    #[test]
    fn norms_increase_on_power_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = random_sample(&mut rng, 0, 6, false);
            for n in 0..6 {
                assert!(norm_n(&a, n as f64) <= norm_n(&a, n as f64 + 1.0));
            }
        }
    }

    #[test]
    fn unit_pair_satisfies_the_estimate() {
        let one = LaurentSample::monomial(0, 1.0);
        let lhs = norm_n(&one.mul(&one).plus(), 1.0);
        let rhs = 5.0 * (norm_n(&one, 4.0) + norm_n(&one, 0.0)).powi(2);
        assert!(lhs <= rhs);
    }

    #[test]
    fn random_pairs_pass() {
        let report = product_estimate_test(&ProductTestConfig { trials: 200, ..Default::default() }).unwrap();
        assert_eq!(report.inequalities_checked, 200 * 5 * 4);
        assert!(report.worst_ratio < 1.0);
    }
}

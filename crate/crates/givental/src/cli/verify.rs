//! `verify`: invariant suites with one PASS/FAIL line per invariant.

use std::fmt;
use std::fs;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;

use super::compute::run_pipeline;
use super::{CliError, PotentialKind, RunConfig};
use crate::convergence::{product_estimate_test, ProductTestConfig};
use crate::fock::operator::required_input_bounds;
use crate::fock::{
    dilaton_residuals, quantize, random_unitary, string_residuals, tau_point, tau_product, Bounds, FockElement, Key, Slot,
};
use crate::frobenius::FrobeniusSpec;
use crate::potentials::{
    abstract_ancestor, descendant_residuals, fundamental_solution, genus0_ancestors, genus0_descendants,
    presentation_residuals, rationality_residuals, Model,
};
use crate::rmatrix::{homogeneity_residual, ode_residual, solve_r, unitarity_residual, RMatrix};
use crate::series::{Matrix, MultiSeries, Rational, Ring};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Unitarity,
    Composition,
    Point,
    Genus0,
    Descendants,
    Rationality,
    Specialization,
    Product,
    All,
}

impl Suite {
    pub const EACH: [Suite; 8] = [
        Suite::Unitarity,
        Suite::Composition,
        Suite::Point,
        Suite::Genus0,
        Suite::Descendants,
        Suite::Rationality,
        Suite::Specialization,
        Suite::Product,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Unitarity => "unitarity",
            Suite::Composition => "composition",
            Suite::Point => "point",
            Suite::Genus0 => "genus0",
            Suite::Descendants => "descendants",
            Suite::Rationality => "rationality",
            Suite::Specialization => "specialization",
            Suite::Product => "product",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|suite| suite.name() == s)
            .ok_or_else(|| CliError::Input(format!("unknown suite '{s}'")))
    }
}

/// Outcome of one named invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub invariant: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {} {} {}", self.suite, self.invariant, self.detail)
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn render(&self) -> String {
        self.checks.iter().map(|c| format!("{c}\n")).collect()
    }

    fn push(&mut self, suite: Suite, invariant: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { suite: suite.name(), invariant: invariant.into(), passed, detail: detail.into() });
    }
}

fn specs(config: &RunConfig) -> Vec<String> {
    if config.spec == "all" {
        FrobeniusSpec::shipped_names().into_iter().map(String::from).collect()
    } else {
        vec![config.spec.clone()]
    }
}

fn with_spec(config: &RunConfig, spec: &str) -> RunConfig {
    RunConfig { spec: spec.to_string(), ..config.clone() }
}

fn nonzero_orders(residuals: &[Matrix]) -> Vec<usize> {
    residuals.iter().enumerate().filter(|(_, m)| !m.is_zero()).map(|(k, _)| k).collect()
}

fn orders_detail(bad: &[usize], total: usize) -> String {
    if bad.is_empty() {
        format!("orders=0..{}", total.saturating_sub(1))
    } else {
        format!("nonzero_at_orders={bad:?}")
    }
}

fn r_checks(report: &mut VerifyReport, prefix: &str, tag: &str, r: &RMatrix, model: &Model) {
    let unitarity = nonzero_orders(&unitarity_residual(r));
    report.push(Suite::Unitarity, format!("{prefix}.unitarity[{tag}]"), unitarity.is_empty(), orders_detail(&unitarity, r.order() + 1));
    let homogeneity = nonzero_orders(&homogeneity_residual(r));
    report.push(
        Suite::Unitarity,
        format!("{prefix}.homogeneity[{tag}]"),
        homogeneity.is_empty(),
        orders_detail(&homogeneity, r.order() + 1),
    );
    let ode = nonzero_orders(&ode_residual(r, &model.frame, &model.algebra));
    report.push(Suite::Unitarity, format!("{prefix}.ode[{tag}]"), ode.is_empty(), orders_detail(&ode, r.order() + 1));
}

fn unitarity(config: &RunConfig, report: &mut VerifyReport) -> Result<(), CliError> {
    let order = config.z_order.unwrap_or(8);
    for name in specs(config) {
        let spec = with_spec(config, &name).load_spec()?;
        let model = Model::new(&spec, &config.precision(), order)?;
        match &config.snapshot {
            None => r_checks(report, "rmatrix", &name, &model.r, &model),
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                let snapshot = RMatrix::parse_dump(&model.ring, &text)?;
                r_checks(report, "rmatrix.snapshot", &name, &snapshot, &model);
                let fresh = solve_r(&model.frame, &model.algebra, snapshot.order())?;
                let differ: Vec<usize> =
                    (0..=snapshot.order()).filter(|&k| !snapshot.coeffs[k].agrees_with(&fresh.coeffs[k])).collect();
                report.push(
                    Suite::Unitarity,
                    format!("rmatrix.snapshot.matches_solution[{name}]"),
                    differ.is_empty(),
                    orders_detail(&differ, snapshot.order() + 1),
                );
            }
        }
    }
    Ok(())
}

fn tau_at(ring: &Arc<Ring>, shift: &[i64], bounds: Bounds) -> FockElement {
    let s: Vec<MultiSeries> = shift.iter().map(|&x| MultiSeries::from_int(ring, x)).collect();
    let inv: Vec<MultiSeries> =
        shift.iter().map(|&x| MultiSeries::from_rational(ring, Rational::new(BigInt::from(1), BigInt::from(x)))).collect();
    tau_product(ring, &s, &inv, bounds)
}

/// Number of random pairs in the composition suite.
pub const COMPOSITION_PAIRS: usize = 20;

/// Rank and output bounds of pair `i`: ranks cycle through 1, 2, 3; rank one and the last pair
/// reach genus two, the other ranks stop at genus one.
pub fn composition_case(i: usize) -> (usize, Bounds) {
    let rank = 1 + i % 3;
    let bounds = match rank {
        _ if i + 1 == COMPOSITION_PAIRS => Bounds::per_genus(vec![3, 1, 1]),
        1 => Bounds::per_genus(vec![3, 2, 1]),
        2 => Bounds::per_genus(vec![3, 2]),
        _ => Bounds::per_genus(vec![3, 1]),
    };
    (rank, bounds)
}

/// One composition check: Â then B̂ against (BA)^ on τ, with A and B seeded from `seed`.
pub fn composition_pair(rank: usize, out: &Bounds, seed: u64) -> Result<(bool, usize), CliError> {
    let ring = Ring::constants(1);
    let middle = required_input_bounds(out);
    let order = crate::fock::operator::top_order(&middle) + 1;
    let a = random_unitary(&ring, rank, order, seed.wrapping_mul(2).wrapping_add(1));
    let b = random_unitary(&ring, rank, order, seed.wrapping_mul(2).wrapping_add(2));
    let shift: Vec<i64> = (1..=rank as i64).map(|k| 2 * k - 1).collect();
    let tau = tau_at(&ring, &shift, required_input_bounds(&middle));
    let stepwise = quantize(&b, &quantize(&a, &tau, &middle)?, out)?;
    let direct = quantize(&b.compose(&a)?, &tau, out)?;
    let differences = stepwise.store.differences(&direct.store, out);
    let same_shift = stepwise.shift.iter().zip(&direct.shift).all(|(x, y)| x.agrees_with(y));
    Ok((differences.is_empty() && same_shift, stepwise.store.len()))
}

fn composition(config: &RunConfig, report: &mut VerifyReport) -> Result<(), CliError> {
    for i in 0..COMPOSITION_PAIRS {
        let (rank, bounds) = composition_case(i);
        let seed = config.seed.wrapping_mul(1000).wrapping_add(i as u64);
        let (ok, entries) = composition_pair(rank, &bounds, seed)?;
        report.push(
            Suite::Composition,
            format!("fock.composition[{i}]"),
            ok,
            format!("rank={rank} genus<={} entries={entries}", bounds.genus),
        );
    }
    Ok(())
}

fn point(config: &RunConfig, report: &mut VerifyReport) -> Result<(), CliError> {
    let spec = FrobeniusSpec::shipped("point")?;
    let bounds = Bounds::tame(3, 4);
    let model = Model::new(&spec, &config.precision(), crate::fock::operator::top_order(&bounds))?;
    let anc = abstract_ancestor(&model.algebra, &model.frame, &model.r, &bounds)?;
    let tau = tau_point(3, 4);
    let store = &anc.element.store;
    let mismatched: Vec<String> = tau
        .entries()
        .iter()
        .filter(|(k, v)| store.lookup(k).map(|x| x.constant_term()) != Some(v.constant_term()))
        .map(|(k, _)| k.to_string())
        .collect();
    let same_size = store.len() == tau.len();
    report.push(
        Suite::Point,
        "potentials.point_identity",
        mismatched.is_empty() && same_size,
        format!("entries={} mismatched={}", tau.len(), mismatched.len()),
    );
    let value = |key: Key| store.lookup(&key).and_then(|v| v.constant_term().as_rational());
    let tau1 = value(Key::new(1, vec![Slot::new(1, 0)]));
    report.push(
        Suite::Point,
        "potentials.tau1_genus1",
        tau1 == Some(Rational::new(BigInt::from(1), BigInt::from(24))),
        format!("value={tau1:?}"),
    );
    let tau000 = value(Key::new(0, vec![Slot::new(0, 0); 3]));
    report.push(Suite::Point, "potentials.tau000_genus0", tau000 == Some(Rational::from_integer(1.into())), format!("value={tau000:?}"));
    Ok(())
}

fn genus0(config: &RunConfig, report: &mut VerifyReport) -> Result<(), CliError> {
    for name in specs(config) {
        let local = RunConfig { genus: 0, insertions: config.insertions.max(3), potential: PotentialKind::Ancestor, ..with_spec(config, &name) };
        let pipeline = run_pipeline(&local)?;
        let tree = genus0_ancestors(&pipeline.model.spec, &pipeline.model.algebra, local.insertions);
        let store = &pipeline.ancestor.element.store;
        let bad = tree.entries().iter().filter(|(k, v)| !store.lookup(k).is_some_and(|x| x.agrees_with(v))).count();
        report.push(
            Suite::Genus0,
            format!("potentials.genus0_tree[{name}]"),
            bad == 0,
            format!("entries={} mismatched={bad}", tree.len()),
        );
    }
    Ok(())
}

fn descendants(config: &RunConfig, report: &mut VerifyReport) -> Result<(), CliError> {
    for name in specs(config) {
        let local = RunConfig { potential: PotentialKind::Both, ..with_spec(config, &name) };
        let pipeline = run_pipeline(&local)?;
        let element = &pipeline.ancestor.element;
        let string = string_residuals(&element.store, 0, &element.pairing)?;
        report.push(Suite::Descendants, format!("fock.string[{name}]"), string.is_empty(), format!("failures={}", string.len()));
        let dilaton = dilaton_residuals(&element.store, &element.shift)?;
        report.push(Suite::Descendants, format!("fock.dilaton[{name}]"), dilaton.is_empty(), format!("failures={}", dilaton.len()));
        let d = pipeline.descendant.as_ref().expect("descendants requested");
        let residuals = descendant_residuals(d, &pipeline.model.spec, &pipeline.model.algebra)?;
        for equation in ["string", "dilaton", "divisor"] {
            let failures = residuals.failures.iter().filter(|(label, _)| label == equation).count();
            report.push(
                Suite::Descendants,
                format!("potentials.{equation}[{name}]"),
                failures == 0,
                format!("checked_total={} failures={failures}", residuals.checked),
            );
        }
    }
    Ok(())
}

fn rationality(config: &RunConfig, report: &mut VerifyReport) -> Result<(), CliError> {
    let spec = FrobeniusSpec::shipped("p1")?;
    let bounds = Bounds::tame(1, config.insertions.max(3));
    let model = Model::new(&spec, &config.precision(), crate::fock::operator::top_order(&bounds))?;
    let anc = abstract_ancestor(&model.algebra, &model.frame, &model.r, &bounds)?;
    let r = rationality_residuals(&anc, &model.algebra);
    let weight = r.weight.as_ref().map(crate::series::cyclotomic::fmt_rational).unwrap_or_else(|| "none".into());
    let expected = Rational::new(BigInt::from(-1), BigInt::from(24));
    report.push(Suite::Rationality, "fock.rationality.weight[p1]", r.weight == Some(expected), format!("weight={weight}"));
    report.push(Suite::Rationality, "fock.rationality.discriminant[p1]", r.discriminant_matches && r.normalized, String::new());
    report.push(
        Suite::Rationality,
        "potentials.rational_jets[p1]",
        r.jet_failures.is_empty(),
        format!("checked={} failures={}", r.jets_checked, r.jet_failures.len()),
    );
    Ok(())
}

fn specialization(config: &RunConfig, report: &mut VerifyReport) -> Result<(), CliError> {
    let spec = FrobeniusSpec::shipped("p1")?;
    let model = Model::new(&spec, &config.precision(), 1)?;
    let bounds = Bounds { genus: 0, insertions: vec![config.insertions.max(3)], psi: config.psi_order };
    let l = fundamental_solution(&model.spec, &model.algebra, 2 * config.psi_order as usize + 2)?;
    let d = genus0_descendants(&model.spec, &model.algebra, &l, &bounds)?;
    let half = Rational::new(BigInt::from(1), BigInt::from(2));
    let one = Rational::from_integer(1.into());
    for (label, a, b) in [("1,0", one.clone(), Rational::zero()), ("1/2,-1/2", half.clone(), -half), ("0,1", Rational::zero(), one)] {
        let r = presentation_residuals(&d, &model.spec, &model.algebra, &[a], &[b])?;
        report.push(
            Suite::Specialization,
            format!("potentials.presentation[p1;{label}]"),
            r.passed() && r.checked > 0,
            format!("checked={} failures={}", r.checked, r.failures.len()),
        );
    }
    Ok(())
}

fn product(config: &RunConfig, report: &mut VerifyReport) -> Result<(), CliError> {
    let test = ProductTestConfig { seed: config.seed, ..Default::default() };
    match product_estimate_test(&test) {
        Ok(r) => report.push(
            Suite::Product,
            "convergence.product_estimate",
            true,
            format!("trials={} inequalities={} worst_ratio={:.6e}", r.trials, r.inequalities_checked, r.worst_ratio),
        ),
        Err(e) => report.push(Suite::Product, "convergence.product_estimate", false, e.to_string()),
    }
    Ok(())
}

/// Runs the selected suites; every invariant yields one check, failures included.
pub fn cmd_verify(config: &RunConfig) -> Result<VerifyReport, CliError> {
    config.validate()?;
    let mut report = VerifyReport::default();
    let suites: Vec<Suite> = if config.suite == Suite::All { Suite::EACH.to_vec() } else { vec![config.suite] };
    for suite in suites {
        match suite {
            Suite::Unitarity => unitarity(config, &mut report)?,
            Suite::Composition => composition(config, &mut report)?,
            Suite::Point => point(config, &mut report)?,
            Suite::Genus0 => genus0(config, &mut report)?,
            Suite::Descendants => descendants(config, &mut report)?,
            Suite::Rationality => rationality(config, &mut report)?,
            Suite::Specialization => specialization(config, &mut report)?,
            Suite::Product => product(config, &mut report)?,
            Suite::All => unreachable!("expanded above"),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(suite: Suite, spec: &str) -> RunConfig {
        RunConfig { suite, spec: spec.into(), genus: 1, insertions: 3, psi_order: 1, degree: 3, ..Default::default() }
    }

    #[test]
    fn unitarity_suite_passes_for_p1() {
        let report = cmd_verify(&config(Suite::Unitarity, "p1")).unwrap();
        assert_eq!(report.checks.len(), 3);
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn corrupted_snapshot_fails_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let spec = FrobeniusSpec::shipped("p1").unwrap();
        let model = Model::new(&spec, &Rational::from_integer(4.into()), 3).unwrap();
        let dump = model.r.dump();
        let path = dir.path().join("rmatrix.txt");
        fs::write(&path, &dump).unwrap();
        let mut c = RunConfig { snapshot: Some(path.clone()), ..config(Suite::Unitarity, "p1") };
        assert!(cmd_verify(&c).unwrap().passed());
        let mut bad = model.r.clone();
        let entry = bad.coeffs[1].get(0, 0).add(&MultiSeries::one(&model.ring));
        bad.coeffs[1].set(0, 0, entry);
        fs::write(&path, bad.dump()).unwrap();
        c.snapshot = Some(path);
        let report = cmd_verify(&c).unwrap();
        let failed: Vec<&str> = report.failures().iter().map(|c| c.invariant.as_str()).collect();
        assert!(failed.contains(&"rmatrix.snapshot.matches_solution[p1]"), "{failed:?}");
        assert!(failed.iter().any(|f| f.starts_with("rmatrix.snapshot.")), "{failed:?}");
    }

    #[test]
    fn point_and_product_suites_pass() {
        for suite in [Suite::Point, Suite::Product] {
            let report = cmd_verify(&config(suite, "point")).unwrap();
            assert!(report.passed(), "{}", report.render());
        }
    }

    #[test]
    fn suite_names_parse() {
        for s in Suite::EACH {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }
}

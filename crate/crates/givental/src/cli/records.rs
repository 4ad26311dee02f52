//! Correlator tables: one record per term `(genus, insertions, exponent, coefficient, order)`.
//!
//! Insertions are `psi:index` pairs joined by `;`, exponents are the ring-variable powers joined
//! by `;`, coefficients use the canonical cyclotomic form and `order` is the truncation order of
//! the entry (`exact` when none). An entry without terms is one record with exponent `-`.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;

use super::CliError;
use crate::fock::{Bounds, CorrelatorStore, Key, Slot};
use crate::series::cyclotomic::{fmt_rational, parse_rational};
use crate::series::{Cyclo, MultiSeries, Rational, Ring};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Txt,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Txt => "txt",
        }
    }

    fn separator(self) -> char {
        match self {
            Format::Csv => ',',
            Format::Txt => '\t',
        }
    }
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "txt" => Ok(Format::Txt),
            other => Err(CliError::Input(format!("unknown format '{other}' (expected csv or txt)"))),
        }
    }
}

const COLUMNS: [&str; 5] = ["genus", "insertions", "exponent", "coefficient", "order"];

fn fmt_insertions(key: &Key) -> String {
    key.slots.iter().map(|s| format!("{}:{}", s.psi, s.index)).collect::<Vec<_>>().join(";")
}

fn fmt_exponent(ring: &Ring, e: &[i64]) -> String {
    let m = BigInt::from(ring.puiseux_denominator);
    e.iter().map(|x| fmt_rational(&Rational::new(BigInt::from(*x), m.clone()))).collect::<Vec<_>>().join(";")
}

/// Renders a store with a header naming the ring variables.
pub fn emit_store(store: &CorrelatorStore, format: Format) -> String {
    let sep = format.separator().to_string();
    let ring = &store.ring;
    let mut out = String::new();
    let names: Vec<&str> = ring.variables.iter().map(|v| v.name.as_str()).collect();
    if format == Format::Txt {
        out.push_str(&format!("# variables: {}\n", names.join(";")));
    }
    out.push_str(&COLUMNS.join(&sep));
    out.push('\n');
    for (key, value) in store.entries() {
        let order = value.truncation_order().map(|o| fmt_rational(&o)).unwrap_or_else(|| "exact".into());
        let ins = fmt_insertions(key);
        if value.terms().is_empty() {
            out.push_str(&[key.genus.to_string(), ins.clone(), "-".into(), "0".into(), order.clone()].join(&sep));
            out.push('\n');
        }
        for (e, c) in value.terms() {
            let row = [key.genus.to_string(), ins.clone(), fmt_exponent(ring, e), c.to_canonical(), order.clone()];
            out.push_str(&row.join(&sep));
            out.push('\n');
        }
    }
    out
}

fn parse_key(genus: &str, insertions: &str) -> Option<Key> {
    let genus: u32 = genus.trim().parse().ok()?;
    let mut slots = Vec::new();
    for item in insertions.split(';').filter(|s| !s.trim().is_empty()) {
        let (psi, index) = item.split_once(':')?;
        slots.push(Slot::new(psi.trim().parse().ok()?, index.trim().parse().ok()?));
    }
    Some(Key::new(genus, slots))
}

/// Reads a table written by [`emit_store`] back into a store over `ring`.
pub fn load_store(
    text: &str,
    format: Format,
    ring: &Arc<Ring>,
    dim: usize,
    bounds: Bounds,
) -> Result<CorrelatorStore, CliError> {
    let sep = format.separator();
    let m = ring.puiseux_denominator as i64;
    let mut grouped: BTreeMap<Key, (BTreeMap<Vec<i64>, Cyclo>, Option<Rational>)> = BTreeMap::new();
    let mut header_seen = false;
    for line in text.lines() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line.split(sep).collect::<Vec<_>>() != COLUMNS {
                return Err(CliError::Input(format!("unexpected table header '{line}'")));
            }
            header_seen = true;
            continue;
        }
        let bad = || CliError::Input(format!("malformed record '{line}'"));
        let fields: Vec<&str> = line.split(sep).collect();
        if fields.len() != COLUMNS.len() {
            return Err(bad());
        }
        let key = parse_key(fields[0], fields[1]).ok_or_else(bad)?;
        let order = match fields[4].trim() {
            "exact" => None,
            o => Some(parse_rational(o).map_err(|_| bad())?),
        };
        let entry = grouped.entry(key).or_insert_with(|| (BTreeMap::new(), order.clone()));
        if entry.1 != order {
            return Err(bad());
        }
        if fields[2].trim() == "-" {
            continue;
        }
        let mut exponent = Vec::new();
        for x in fields[2].split(';').filter(|x| !x.trim().is_empty()) {
            let r = parse_rational(x).map_err(|_| bad())?;
            let scaled = r * Rational::from_integer(BigInt::from(m));
            if !scaled.is_integer() {
                return Err(bad());
            }
            exponent.push(i64::try_from(scaled.to_integer()).map_err(|_| bad())?);
        }
        if exponent.len() != ring.nvars() {
            return Err(bad());
        }
        let c = Cyclo::parse(fields[3], ring.cyclotomic_order).map_err(|_| bad())?;
        entry.0.insert(exponent, c);
    }
    if !header_seen {
        return Err(CliError::Input("table has no header".into()));
    }
    let mut store = CorrelatorStore::new(ring, dim, bounds);
    for (key, (terms, order)) in grouped {
        store.insert(key, MultiSeries::from_terms(ring, terms, order));
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::tau_point;
    use crate::frobenius::FrobeniusSpec;
    use crate::potentials::{abstract_ancestor, Model};

    #[test]
    fn tau_store_round_trips_in_both_formats() {
        let store = tau_point(2, 3);
        for format in [Format::Csv, Format::Txt] {
            let text = emit_store(&store, format);
            let back = load_store(&text, format, &store.ring, 1, store.bounds.clone()).unwrap();
            assert_eq!(back.entries(), store.entries());
        }
    }

    #[test]
    fn p1_ancestor_store_round_trips() {
        let spec = FrobeniusSpec::shipped("p1").unwrap();
        let m = Model::new(&spec, &Rational::from_integer(BigInt::from(4)), 3).unwrap();
        let anc = abstract_ancestor(&m.algebra, &m.frame, &m.r, &Bounds::tame(1, 2)).unwrap();
        let store = &anc.element.store;
        let text = emit_store(store, Format::Csv);
        let back = load_store(&text, Format::Csv, &m.ring, 2, store.bounds.clone()).unwrap();
        assert_eq!(back.entries(), store.entries());
    }

    #[test]
    fn malformed_records_are_input_errors() {
        let ring = Ring::constants(1);
        let text = "genus,insertions,exponent,coefficient,order\n0,0:0;x,,1,exact\n";
        assert!(matches!(load_store(text, Format::Csv, &ring, 1, Bounds::tame(0, 3)), Err(CliError::Input(_))));
    }
}

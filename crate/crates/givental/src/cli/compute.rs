//! `compute`: ancestor and descendant tables, the R-matrix snapshot and a run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::records::emit_store;
use super::{CliError, RunConfig};
use crate::fock::operator::top_order;
use crate::fock::{Bounds, CorrelatorStore};
use crate::potentials::{
    abstract_ancestor, ancestor_to_descendant, fundamental_solution, AncestorPotential, DescendantPotential,
    FundamentalSolution, GenusOnePolicy, Model,
};
use crate::series::cyclotomic::fmt_rational;

/// In-memory results of one pipeline run.
pub struct Pipeline {
    pub model: Model,
    pub ancestor: AncestorPotential,
    pub fundamental: Option<FundamentalSolution>,
    pub descendant: Option<DescendantPotential>,
}

pub struct ComputeArtifacts {
    pub pipeline: Pipeline,
    /// Written files, in the order they appear in the manifest.
    pub files: Vec<PathBuf>,
}

pub fn ancestor_bounds(config: &RunConfig) -> Bounds {
    Bounds::tame(config.genus, config.insertions)
}

pub fn descendant_bounds(config: &RunConfig) -> Bounds {
    Bounds { genus: config.genus, insertions: vec![config.insertions; config.genus as usize + 1], psi: config.psi_order }
}

pub fn r_order(config: &RunConfig) -> usize {
    config.z_order.unwrap_or(0).max(top_order(&ancestor_bounds(config))).max(1)
}

/// z⁻¹-order of the fundamental solution: lowering one slot reads L through z^{−(2ψ+2)}.
pub fn l_order(config: &RunConfig) -> usize {
    2 * config.psi_order as usize + 2
}

/// Runs the ancestor stage, and the descendant stage when requested.
pub fn run_pipeline(config: &RunConfig) -> Result<Pipeline, CliError> {
    config.validate()?;
    let spec = config.load_spec()?;
    let model = Model::new(&spec, &config.precision(), r_order(config))?;
    let ancestor = abstract_ancestor(&model.algebra, &model.frame, &model.r, &ancestor_bounds(config))?;
    let (fundamental, descendant) = if config.potential.descendants() {
        let l = fundamental_solution(&model.spec, &model.algebra, l_order(config))?;
        let policy = if config.genus >= 1 { GenusOnePolicy::Recover } else { GenusOnePolicy::Omit };
        let d = ancestor_to_descendant(&ancestor, &model.spec, &model.algebra, &l, policy, &descendant_bounds(config))?;
        (Some(l), Some(d))
    } else {
        (None, None)
    };
    Ok(Pipeline { model, ancestor, fundamental, descendant })
}

fn genus_one_table(d: &DescendantPotential) -> Option<String> {
    let g1 = d.genus_one.as_ref()?;
    let mut out = String::new();
    for (a, c) in g1.classical.iter().enumerate() {
        writeln!(out, "linear\t{a}\t{}", c.to_canonical()).unwrap();
    }
    writeln!(out, "series\t{}", g1.series.to_canonical()).unwrap();
    Some(out)
}

fn write(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, text)?;
    files.push(path);
    Ok(())
}

fn record_count(store: &CorrelatorStore) -> usize {
    store.entries().values().map(|v| v.terms().len().max(1)).sum()
}

/// Runs the pipeline and writes its artifacts into `config.out`.
pub fn cmd_compute(config: &RunConfig) -> Result<ComputeArtifacts, CliError> {
    let pipeline = run_pipeline(config)?;
    fs::create_dir_all(&config.out)?;
    let ext = config.format.extension();
    let mut files = Vec::new();
    let mut listed = Vec::new();
    if config.potential.ancestors() {
        let store = &pipeline.ancestor.element.store;
        let name = format!("ancestors.{ext}");
        write(&config.out, &name, &emit_store(store, config.format), &mut files)?;
        listed.push(json!({ "name": name, "entries": store.len(), "records": record_count(store) }));
    }
    if let Some(d) = &pipeline.descendant {
        let name = format!("descendants.{ext}");
        write(&config.out, &name, &emit_store(&d.store, config.format), &mut files)?;
        listed.push(json!({ "name": name, "entries": d.store.len(), "records": record_count(&d.store) }));
        if let Some(text) = genus_one_table(d) {
            write(&config.out, "genus_one_primary.txt", &text, &mut files)?;
            listed.push(json!({ "name": "genus_one_primary.txt" }));
        }
    }
    write(&config.out, "rmatrix.txt", &pipeline.model.r.dump(), &mut files)?;
    listed.push(json!({ "name": "rmatrix.txt", "order": pipeline.model.r.order() }));
    let spec = &pipeline.model.spec;
    let ring = &pipeline.model.ring;
    let manifest = json!({
        "program": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": "compute",
        "spec": { "source": config.spec, "name": spec.name, "rank": spec.rank() },
        "base_point": spec.base_point.iter().map(|b| json!({
            "coordinate": b.coordinate, "scale": fmt_rational(&b.scale), "parameter": b.parameter,
        })).collect::<Vec<_>>(),
        "ring": {
            "variables": ring.variables.iter().map(|v| v.name.clone()).collect::<Vec<_>>(),
            "precision": fmt_rational(&config.precision()),
            "puiseux_denominator": ring.puiseux_denominator,
            "cyclotomic_order": ring.cyclotomic_order,
        },
        "orders": {
            "genus": config.genus,
            "insertions": config.insertions,
            "psi": config.psi_order,
            "degree": config.degree,
            "r_matrix": pipeline.model.r.order(),
            "fundamental_solution": pipeline.fundamental.as_ref().map(|l| l.order()),
        },
        "seed": config.seed,
        "format": ext,
        "files": listed,
    });
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest is valid JSON");
    text.push('\n');
    write(&config.out, "manifest.json", &text, &mut files)?;
    Ok(ComputeArtifacts { pipeline, files })
}

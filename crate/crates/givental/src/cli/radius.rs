//! `estimate-radius`: empirical (ε, C) fits per genus, from a table or an inline computation.

use std::fs;

use serde_json::json;

use super::compute::{ancestor_bounds, run_pipeline};
use super::records::load_store;
use super::{CliError, PotentialKind, RunConfig};
use crate::convergence::{nf_radius_estimate, ConvergenceError, RadiusFit};
use crate::fock::{Bounds, CorrelatorStore};

fn loaded_store(config: &RunConfig) -> Result<Option<CorrelatorStore>, CliError> {
    let Some(path) = &config.input else { return Ok(None) };
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let spec = config.load_spec()?;
    let ring = spec.ring(&config.precision())?;
    let bounds = Bounds { psi: config.psi_order.max(3 * config.genus + config.insertions as u32), ..ancestor_bounds(config) };
    Ok(Some(load_store(&text, config.format, &ring, spec.rank(), bounds)?))
}

fn source_store(config: &RunConfig) -> Result<CorrelatorStore, CliError> {
    if let Some(store) = loaded_store(config)? {
        return Ok(store);
    }
    let pipeline = run_pipeline(config)?;
    Ok(match (config.potential, pipeline.descendant) {
        (PotentialKind::Descendant, Some(d)) => d.store,
        _ => pipeline.ancestor.element.store,
    })
}

pub fn fit_json(fit: &RadiusFit) -> serde_json::Value {
    json!({
        "genus": fit.genus,
        "samples": fit.samples,
        "log_epsilon": fit.log_epsilon,
        "log_c": fit.log_c,
        "log_k": fit.log_k,
        "identifiable": fit.identifiable,
        "max_residual": fit.max_residual,
        "rms_residual": fit.rms_residual,
        "r_squared": fit.r_squared,
        "extrapolation_residual": fit.extrapolation_residual,
        "divergent": fit.divergent,
    })
}

/// Fits every genus up to `config.genus` that has data and writes `radius_g<g>.json` for each.
/// Fails with InsufficientData when no genus has enough nonzero coefficients.
pub fn cmd_estimate_radius(config: &RunConfig) -> Result<Vec<RadiusFit>, CliError> {
    config.validate()?;
    let store = source_store(config)?;
    estimate_store(config, &store)
}

pub fn estimate_store(config: &RunConfig, store: &CorrelatorStore) -> Result<Vec<RadiusFit>, CliError> {
    let mut fits = Vec::new();
    let mut last_error = None;
    for genus in 0..=config.genus {
        match nf_radius_estimate(store, genus) {
            Ok(fit) => fits.push(fit),
            Err(e @ ConvergenceError::InsufficientData(_)) => last_error = Some(e),
            Err(e) => return Err(e.into()),
        }
    }
    if fits.is_empty() {
        return Err(last_error.unwrap_or_else(|| ConvergenceError::InsufficientData("no genus requested".into())).into());
    }
    fs::create_dir_all(&config.out)?;
    for fit in &fits {
        let mut text = serde_json::to_string_pretty(&fit_json(fit)).expect("fit is valid JSON");
        text.push('\n');
        fs::write(config.out.join(format!("radius_g{}.json", fit.genus)), text)?;
    }
    Ok(fits)
}

/// An empty store over the working ring.
pub fn empty_store(config: &RunConfig) -> Result<CorrelatorStore, CliError> {
    let spec = config.load_spec()?;
    let ring = spec.ring(&config.precision())?;
    Ok(CorrelatorStore::new(&ring, spec.rank(), ancestor_bounds(config)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_genus_two_fit_is_finite() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig { spec: "point".into(), genus: 2, insertions: 5, out: dir.path().to_path_buf(), potential: PotentialKind::Ancestor, ..Default::default() };
        let fits = cmd_estimate_radius(&config).unwrap();
        let g2 = fits.iter().find(|f| f.genus == 2).unwrap();
        assert!(g2.log_epsilon.is_finite() && g2.log_c.is_finite());
        assert!(dir.path().join("radius_g2.json").exists());
    }

    #[test]
    fn empty_store_reports_insufficient_data() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig { out: dir.path().to_path_buf(), ..Default::default() };
        let err = estimate_store(&config, &empty_store(&config).unwrap()).unwrap_err();
        assert!(matches!(err, CliError::Convergence(ConvergenceError::InsufficientData(_))));
        assert_eq!(err.exit_code(), 3);
    }
}

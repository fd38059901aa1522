//! Conditional prediction of the second coordinate given the first.

use std::path::Path;

use serde::Serialize;

use unimodal::diagnostics::quantile_sorted;
use unimodal::mcmc::McmcConfig;
use unimodal::predictive::{predict_conditional, Snapshot};

use crate::config::RunConfig;
use crate::fit::{chain_rng, files, read_states};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictRow {
    pub given: f64,
    pub draws: usize,
    pub q025: f64,
    pub median: f64,
    pub q975: f64,
}

/// `n_draws` draws of `y2 | y1 = given`, cycling through the snapshots; each
/// given value has its own generator stream.
pub fn conditional_draws(
    snapshots: &[Snapshot<f64>],
    given: f64,
    n_draws: usize,
    cfg: &McmcConfig<f64>,
    seed: u64,
    stream: u64,
) -> Result<Vec<f64>, CliError> {
    if snapshots.is_empty() {
        return Err(CliError::Data("no posterior states to predict from".into()));
    }
    let mut rng = chain_rng(seed, stream);
    (0..n_draws)
        .map(|i| {
            predict_conditional(&snapshots[i % snapshots.len()], given, &cfg.prior, &cfg.tuning, &mut rng)
                .map_err(|e| CliError::Numerical(format!("prediction at {given}: {e}")))
        })
        .collect()
}

pub fn predict_rows(
    snapshots: &[Snapshot<f64>],
    given: &[f64],
    n_draws: usize,
    cfg: &McmcConfig<f64>,
    seed: u64,
) -> Result<Vec<PredictRow>, CliError> {
    if n_draws == 0 {
        return Err(CliError::Config("n_draws must be at least 1".into()));
    }
    given
        .iter()
        .enumerate()
        .map(|(k, &g)| {
            let mut d = conditional_draws(snapshots, g, n_draws, cfg, seed, k as u64)?;
            d.sort_by(f64::total_cmp);
            Ok(PredictRow {
                given: g,
                draws: n_draws,
                q025: quantile_sorted(&d, 0.025),
                median: quantile_sorted(&d, 0.5),
                q975: quantile_sorted(&d, 0.975),
            })
        })
        .collect()
}

/// Loads the run in `dir` and writes `output` with one quantile row per given value.
pub fn predict(dir: &Path, given: &[f64], n_draws: usize, seed: u64, output: &Path) -> Result<Vec<PredictRow>, CliError> {
    let manifest = std::fs::read_to_string(dir.join(files::MANIFEST))
        .map_err(|e| CliError::Io(format!("{}: {e}", dir.join(files::MANIFEST).display())))?;
    let manifest: serde_json::Value = serde_json::from_str(&manifest)?;
    let cfg: RunConfig = serde_json::from_value(manifest["config"].clone())
        .map_err(|e| CliError::Data(format!("manifest config: {e}")))?;
    if cfg.model.dim() != 2 {
        return Err(CliError::Config("predict needs a bivariate run".into()));
    }
    let snapshots = read_states(dir)?.iter().map(|s| s.snapshot()).collect::<Result<Vec<_>, _>>()?;
    let rows = predict_rows(&snapshots, given, n_draws, &cfg.mcmc(), seed)?;
    let mut w = csv::Writer::from_path(output)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows)
}

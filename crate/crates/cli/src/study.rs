//! Correlation induced in `Y` by coupling either the uniforms or the normals.

use std::path::Path;

use serde::Serialize;

use unimodal::simulate::{dependence_study, Side};

use crate::fit::chain_rng;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub side: &'static str,
    pub mu1: f64,
    pub mu2: f64,
    pub rho: f64,
    pub lower: f64,
    pub median: f64,
    pub upper: f64,
    pub mean: f64,
}

/// Bands for every side, mean pair and grid correlation; each (side, mean
/// pair) cell has its own generator stream.
pub fn study(sides: &[Side], mus: &[[f64; 2]], c: f64, grid: &[f64], reps: usize, n: usize, seed: u64) -> Result<Vec<StudyRow>, CliError> {
    let mut rows = Vec::new();
    let mut stream = 0;
    for &side in sides {
        for &mu in mus {
            let mut rng = chain_rng(seed, stream);
            stream += 1;
            let bands = dependence_study(side, mu, c, grid, reps, n, &mut rng).map_err(|e| CliError::Config(e.to_string()))?;
            rows.extend(bands.into_iter().map(|b| StudyRow {
                side: match side {
                    Side::X => "x",
                    Side::Z => "z",
                },
                mu1: mu[0],
                mu2: mu[1],
                rho: b.rho,
                lower: b.lower,
                median: b.median,
                upper: b.upper,
                mean: b.mean,
            }));
        }
    }
    Ok(rows)
}

pub fn write_rows(path: &Path, rows: &[StudyRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

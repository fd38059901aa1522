//! Posterior summaries and plot data from a run directory.

use std::path::Path;

use serde::Serialize;

use unimodal::diagnostics::{ess, mean, quantile_sorted, variance};

use crate::fit::files;
use crate::CliError;

/// Summary of one parameter pooled over chains.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterRow {
    pub name: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q975: f64,
    /// Location of the maximum of a Gaussian kernel density estimate.
    pub mode: f64,
    /// Effective sample size summed over chains.
    pub ess: f64,
}

/// Bin counts of one variable over equal-width bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub name: String,
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub parameters: Vec<ParameterRow>,
    pub predictive: Vec<ParameterRow>,
    pub histograms: Vec<Histogram>,
    pub acceptance: serde_json::Value,
}

/// Mode of a Gaussian kernel density estimate (Silverman bandwidth) on a 512-point grid.
pub fn kde_mode(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let (lo, hi) = (s[0], s[s.len() - 1]);
    if !(hi > lo) {
        return lo;
    }
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let spread = variance(&s).sqrt().min(iqr / 1.34);
    let spread = if spread > 0.0 { spread } else { variance(&s).sqrt() };
    let h = 0.9 * spread * n.powf(-0.2);
    let grid = 512;
    let mut best = (f64::NEG_INFINITY, lo);
    for g in 0..=grid {
        let t = lo + (hi - lo) * g as f64 / grid as f64;
        let a = s.partition_point(|&v| v < t - 8.0 * h);
        let b = s.partition_point(|&v| v <= t + 8.0 * h);
        let f: f64 = s[a..b].iter().map(|&v| (-0.5 * ((v - t) / h).powi(2)).exp()).sum();
        if f > best.0 {
            best = (f, t);
        }
    }
    best.1
}

/// Per-parameter rows from `per_chain[chain][parameter]` draws.
pub fn parameter_rows(names: &[&str], per_chain: &[Vec<Vec<f64>>]) -> Vec<ParameterRow> {
    names
        .iter()
        .enumerate()
        .filter_map(|(j, name)| {
            let pooled: Vec<f64> = per_chain.iter().flat_map(|c| c[j].iter().copied()).collect();
            if pooled.is_empty() {
                return None;
            }
            let mut s = pooled.clone();
            s.sort_by(f64::total_cmp);
            let ess_sum = per_chain.iter().filter(|c| c[j].len() > 1).map(|c| ess(&c[j])).sum();
            Some(ParameterRow {
                name: name.to_string(),
                n: s.len(),
                mean: mean(&s),
                sd: variance(&s).sqrt(),
                q025: quantile_sorted(&s, 0.025),
                q25: quantile_sorted(&s, 0.25),
                median: quantile_sorted(&s, 0.5),
                q75: quantile_sorted(&s, 0.75),
                q975: quantile_sorted(&s, 0.975),
                mode: kde_mode(&s),
                ess: ess_sum,
            })
        })
        .collect()
}

pub fn write_parameter_rows(path: &Path, rows: &[ParameterRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn histogram(name: &str, x: &[f64], bins: usize) -> Histogram {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges: Vec<f64> = (0..=bins).map(|k| lo + width * k as f64).collect();
    let mut counts = vec![0; bins];
    for &v in x {
        counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    Histogram { name: name.into(), edges, counts }
}

/// Headered numeric CSV as (names, per-chain columns). A `chain` column, when
/// present, splits the rows; `iteration` is dropped.
fn read_by_chain(path: &Path) -> Result<(Vec<String>, Vec<Vec<Vec<f64>>>), CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let chain_col = header.iter().position(|h| h == "chain");
    let keep: Vec<usize> = (0..header.len()).filter(|&j| header[j] != "chain" && header[j] != "iteration").collect();
    let mut chains: Vec<Vec<Vec<f64>>> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(format!("{} row {}: {e}", path.display(), i + 1)))?;
        let parse = |j: usize| -> Result<f64, CliError> {
            rec.get(j)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| CliError::Data(format!("{} row {}: bad value in '{}'", path.display(), i + 1, header[j])))
        };
        let k = match chain_col {
            Some(j) => parse(j)? as usize,
            None => 0,
        };
        while chains.len() <= k {
            chains.push(vec![Vec::new(); keep.len()]);
        }
        for (slot, &j) in keep.iter().enumerate() {
            chains[k][slot].push(parse(j)?);
        }
    }
    Ok((keep.iter().map(|&j| header[j].clone()).collect(), chains))
}

/// Summarizes a run directory; writes `report.json` and `histograms.csv` there.
pub fn summarize(dir: &Path, bins: usize) -> Result<Report, CliError> {
    let draws = dir.join(files::DRAWS);
    let (names, chains) = read_by_chain(&draws)?;
    if chains.iter().all(|c| c.iter().all(Vec::is_empty)) {
        return Err(CliError::Data(format!("no samples in {}", draws.display())));
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let parameters = parameter_rows(&refs, &chains);
    let (pnames, pchains) = read_by_chain(&dir.join(files::PREDICTIVE))?;
    let prefs: Vec<&str> = pnames.iter().map(String::as_str).collect();
    let predictive = parameter_rows(&prefs, &pchains);

    let mut histograms = Vec::new();
    for (set, names) in [(&chains, &names), (&pchains, &pnames)] {
        for (j, name) in names.iter().enumerate() {
            let pooled: Vec<f64> = set.iter().flat_map(|c| c[j].iter().copied()).collect();
            if !pooled.is_empty() {
                histograms.push(histogram(name, &pooled, bins.max(1)));
            }
        }
    }
    let acceptance = std::fs::read_to_string(dir.join(files::MANIFEST))
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .and_then(|m| m.get("acceptance").cloned())
        .unwrap_or(serde_json::Value::Null);
    let report = Report { parameters, predictive, histograms, acceptance };

    let mut w = csv::Writer::from_path(dir.join("histograms.csv"))?;
    w.write_record(["variable", "lower", "upper", "count"])?;
    for h in &report.histograms {
        for (k, c) in h.counts.iter().enumerate() {
            w.write_record([h.name.clone(), h.edges[k].to_string(), h.edges[k + 1].to_string(), c.to_string()])?;
        }
    }
    w.flush()?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

/// Plain-text rendering of a report.
pub fn render(report: &Report) -> String {
    let mut out = String::new();
    let mut table = |title: &str, rows: &[ParameterRow]| {
        out.push_str(&format!("{title}\n{:<10} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12} {:>9}\n", "", "mean", "sd", "2.5%", "median", "97.5%", "mode", "ess"));
        for r in rows {
            out.push_str(&format!(
                "{:<10} {:>12.5} {:>12.5} {:>12.5} {:>12.5} {:>12.5} {:>12.5} {:>9.1}\n",
                r.name, r.mean, r.sd, r.q025, r.median, r.q975, r.mode, r.ess
            ));
        }
    };
    table("posterior", &report.parameters);
    table("predictive", &report.predictive);
    out.push_str(&format!("acceptance {}\n", report.acceptance));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kde_mode_finds_the_peak() {
        let x: Vec<f64> = (0..2000).map(|i| ((i as f64 + 0.5) / 2000.0 * 6.0 - 3.0).powi(3)).collect();
        assert!(kde_mode(&x).abs() < 0.2);
    }

    #[test]
    fn histogram_counts_everything() {
        let h = histogram("x", &[0.0, 0.5, 1.0, 1.0, 2.0], 4);
        assert_eq!(h.counts.iter().sum::<usize>(), 5);
        assert_eq!(h.counts, vec![1, 1, 2, 1]);
    }
}

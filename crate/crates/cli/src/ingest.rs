//! CSV ingestion: headered files, named columns, row-numbered errors.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use unimodal::data::Dataset;
use unimodal::diagnostics::{mean, quantile_sorted, variance};

use crate::CliError;

/// Order statistics and moments of one ingested column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnSummary {
    pub name: String,
    pub n: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
}

impl ColumnSummary {
    pub fn of(name: &str, values: &[f64]) -> Self {
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        Self {
            name: name.into(),
            n: s.len(),
            min: s[0],
            q25: quantile_sorted(&s, 0.25),
            median: quantile_sorted(&s, 0.5),
            q75: quantile_sorted(&s, 0.75),
            max: s[s.len() - 1],
            mean: mean(&s),
            sd: variance(&s).sqrt(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub data: Dataset<f64>,
    pub columns: Vec<String>,
    pub summaries: Vec<ColumnSummary>,
}

/// Reads `dim` columns of a headered CSV. `columns` names them; when empty the
/// first `dim` columns are used. Row numbers in errors count data rows from 1.
/// With `rows = Some(k)`, a random subset of `k` rows (drawn with `row_seed`,
/// kept in file order) is returned.
pub fn ingest(path: &Path, columns: &[String], dim: usize, rows: Option<usize>, row_seed: u64) -> Result<Ingested, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader.headers().map_err(|e| CliError::Data(e.to_string()))?.iter().map(String::from).collect();
    let names: Vec<String> = if columns.is_empty() { header.iter().take(dim).cloned().collect() } else { columns.to_vec() };
    if names.len() != dim {
        return Err(CliError::Data(format!("need {dim} column(s), file has {}", header.len())));
    }
    let index: Vec<usize> = names
        .iter()
        .map(|n| {
            header.iter().position(|h| h == n).ok_or_else(|| CliError::Data(format!("no column named '{n}' in {}", path.display())))
        })
        .collect::<Result<_, _>>()?;
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); dim];
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| CliError::Data(format!("row {row}: {e}")))?;
        for (l, &j) in index.iter().enumerate() {
            let field = record.get(j).unwrap_or("");
            if field.is_empty() || field.eq_ignore_ascii_case("na") || field.eq_ignore_ascii_case("nan") {
                return Err(CliError::Data(format!("row {row}: missing value in column '{}'", names[l])));
            }
            let v: f64 = field
                .parse()
                .map_err(|_| CliError::Data(format!("row {row}: non-numeric value '{field}' in column '{}'", names[l])))?;
            if !v.is_finite() {
                return Err(CliError::Data(format!("row {row}: non-finite value '{field}' in column '{}'", names[l])));
            }
            values[l].push(v);
        }
    }
    if values[0].is_empty() {
        return Err(CliError::Data(format!("{} has no data rows", path.display())));
    }
    if let Some(k) = rows {
        let n = values[0].len();
        if k == 0 || k > n {
            return Err(CliError::Config(format!("row subset of {k} requested from {n} rows")));
        }
        let mut pick = rand::seq::index::sample(&mut ChaCha8Rng::seed_from_u64(row_seed), n, k).into_vec();
        pick.sort_unstable();
        for col in &mut values {
            *col = pick.iter().map(|&i| col[i]).collect();
        }
    }
    let summaries = names.iter().zip(&values).map(|(n, v)| ColumnSummary::of(n, v)).collect();
    let data = Dataset::new(values).map_err(CliError::from_core)?;
    Ok(Ingested { data, columns: names, summaries })
}

/// Writes a dataset as headered CSV.
pub fn write_dataset(path: &Path, names: &[String], data: &Dataset<f64>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(names)?;
    for i in 0..data.len() {
        w.write_record(data.columns().iter().map(|c| c.values()[i].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

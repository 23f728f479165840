//! Pairing an estimator's predictions CSV with manifest labels.

use std::collections::HashMap;
use std::path::Path;

use airforge_core::dataset::{read_rows, ManifestRow};

use crate::error::CliError;
use crate::Param;

/// Estimates and labels in prediction-file order.
#[derive(Debug, Default)]
pub struct Paired {
    pub estimates: Vec<f64>,
    pub labels: Vec<f64>,
}

pub fn load_labels(path: &Path) -> Result<Vec<ManifestRow>, CliError> {
    let file = if path.is_dir() {
        path.join("manifest.jsonl")
    } else {
        path.to_path_buf()
    };
    Ok(read_rows(&file)?)
}

enum Key {
    Row(usize),
    Mixture(usize),
}

pub fn pair(pred: &Path, rows: &[ManifestRow], param: Param) -> Result<Paired, CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(pred)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let param_name = match param {
        Param::T60 => "t60",
        Param::Drr => "drr",
    };
    let value = col("prediction").or_else(|| col(param_name)).ok_or_else(|| {
        CliError::Data(format!(
            "{}: needs a `prediction` or `{param_name}` column",
            pred.display()
        ))
    })?;
    let key = match (col("row"), col("mixture")) {
        (Some(i), _) => Key::Row(i),
        (None, Some(i)) => Key::Mixture(i),
        _ => {
            return Err(CliError::Data(format!(
                "{}: needs a `row` or `mixture` column",
                pred.display()
            )))
        }
    };

    let by_row: HashMap<usize, &ManifestRow> = rows.iter().map(|r| (r.row, r)).collect();
    let by_mixture: HashMap<&str, &ManifestRow> =
        rows.iter().map(|r| (r.mixture.as_str(), r)).collect();
    let mut out = Paired::default();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let bad = |what: &str| CliError::Data(format!("{}:{}: {what}", pred.display(), line + 2));
        let field = |i: usize| record.get(i).ok_or_else(|| bad("missing field"));
        let estimate: f64 = field(value)?.parse().map_err(|_| bad("prediction is not a number"))?;
        let row = match key {
            Key::Row(i) => {
                let r: usize = field(i)?.parse().map_err(|_| bad("row is not an index"))?;
                by_row.get(&r).copied()
            }
            Key::Mixture(i) => by_mixture.get(field(i)?).copied(),
        }
        .ok_or_else(|| bad("no matching manifest row"))?;
        out.estimates.push(estimate);
        out.labels.push(match param {
            Param::T60 => row.label_t60,
            Param::Drr => row.label_drr,
        });
    }
    if out.estimates.len() < rows.len() {
        log::info!(
            "event=partial_predictions predicted={} labelled={}",
            out.estimates.len(),
            rows.len()
        );
    }
    Ok(out)
}

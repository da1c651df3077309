use std::collections::BTreeSet;
use std::io::Read;

use super::{DatasetBundle, PreparedSample};
use crate::error::{Error, Result};

pub const LABEL_COLUMN: &str = "label";

/// Reads a headed CSV table. Every column except `label` is a numeric
/// feature, min-max scaled per column into `[0, 1]` (constant columns map
/// to 0). Class indices follow the sorted order of the distinct labels.
/// Without a `label` column all samples are unlabelled.
pub fn load_csv<R: Read>(reader: R) -> Result<DatasetBundle> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers()?.clone();
    let label_col = headers.iter().position(|h| h == LABEL_COLUMN);
    let n_features = headers.len() - usize::from(label_col.is_some());
    if n_features == 0 {
        return Err(Error::InvalidTable("no feature columns".into()));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<Option<String>> = Vec::new();
    for (r, record) in csv.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::InvalidTable(format!(
                "ragged row {}: {len} cells, header has {expected_len}",
                r + 1
            )),
            _ => Error::Csv(e),
        })?;
        let mut row = Vec::with_capacity(n_features);
        let mut label = None;
        for (c, cell) in record.iter().enumerate() {
            if Some(c) == label_col {
                label = (!cell.is_empty()).then(|| cell.to_owned());
                continue;
            }
            let value: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                Error::InvalidTable(format!(
                    "row {}, column `{}`: `{cell}` is not a number",
                    r + 1,
                    &headers[c]
                ))
            })?;
            row.push(value);
        }
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("table without data rows"));
    }

    for c in 0..n_features {
        let (lo, hi) = rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[c]), hi.max(r[c])));
        for row in &mut rows {
            row[c] = if hi > lo { (row[c] - lo) / (hi - lo) } else { 0.0 };
        }
    }

    let class_names: Vec<String> =
        labels.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let samples = rows
        .into_iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (input, label))| PreparedSample {
            sample_id: format!("row-{i}"),
            label: label.map(|l| class_names.binary_search(&l).expect("label collected above")),
            input,
        })
        .collect();
    Ok(DatasetBundle { input_length: n_features, class_names, samples, summary: None })
}

//! Per-class aggregation of local CAMs into a global explanation.
//!
//! CAMs of all samples predicted as one class are stacked into a
//! [`CamMatrix`] (one row per sample, one column per feature). Each column
//! is then reduced to two indicators: an impact value (mean, median or KDE
//! mode) and a variability value in `[0, 1]`.

mod kde;
mod variability;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use kde::{kde_mode, silverman_bandwidth, DEFAULT_GRID_POINTS};
pub use variability::{column_variability, ENTROPY_BINS};

use crate::cam::cam_for_prediction;
use crate::dataset::PreparedSample;
use crate::error::{Error, Result};
use crate::nn::Model;

/// Normalized CAMs of one predicted class, `n_samples x length`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CamMatrix {
    class_index: usize,
    sample_ids: Vec<String>,
    length: usize,
    values: Vec<f64>,
}

impl CamMatrix {
    pub fn new(class_index: usize, sample_ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("CAM matrix without rows"));
        }
        if rows.len() != sample_ids.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows for {} sample ids",
                rows.len(),
                sample_ids.len()
            )));
        }
        let length = rows[0].len();
        let mut values = Vec::with_capacity(rows.len() * length);
        for row in &rows {
            if row.len() != length {
                return Err(Error::ShapeMismatch("ragged CAM matrix rows".into()));
            }
            if row.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                return Err(Error::ShapeMismatch("CAM matrix entries must lie in [-1, 1]".into()));
            }
            values.extend_from_slice(row);
        }
        Ok(Self { class_index, sample_ids, length, values })
    }

    pub fn class_index(&self) -> usize {
        self.class_index
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    /// Number of features per row.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.length..(i + 1) * self.length]
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.length + feature]
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        (0..self.n_samples()).map(|i| self.value(i, feature)).collect()
    }

    pub fn position(&self, sample_id: &str) -> Option<usize> {
        self.sample_ids.iter().position(|s| s == sample_id)
    }

    /// Matrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptySelection);
        }
        let mut values = Vec::with_capacity(rows.len() * self.length);
        let mut ids = Vec::with_capacity(rows.len());
        for &r in rows {
            if r >= self.n_samples() {
                return Err(Error::ShapeMismatch(format!("row {r} out of range")));
            }
            values.extend_from_slice(self.row(r));
            ids.push(self.sample_ids[r].clone());
        }
        Ok(Self { class_index: self.class_index, sample_ids: ids, length: self.length, values })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMethod {
    Mean,
    Median,
    KdeMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariabilityMethod {
    Variance,
    Stddev,
    Entropy,
    Gini,
}

impl AggregationMethod {
    pub const ALL: [Self; 3] = [Self::Mean, Self::Median, Self::KdeMode];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::Median => "median",
            Self::KdeMode => "kde_mode",
        }
    }
}

impl VariabilityMethod {
    pub const ALL: [Self; 4] = [Self::Variance, Self::Stddev, Self::Entropy, Self::Gini];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Variance => "variance",
            Self::Stddev => "stddev",
            Self::Entropy => "entropy",
            Self::Gini => "gini",
        }
    }
}

impl FromStr for AggregationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_owned()))
    }
}

impl FromStr for VariabilityMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_owned()))
    }
}

impl fmt::Display for AggregationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for VariabilityMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The global (or sub-global) explanation of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedCam {
    pub class_index: usize,
    pub n_samples: usize,
    pub agg_method: AggregationMethod,
    pub var_method: VariabilityMethod,
    pub impact: Vec<f64>,
    pub variability: Vec<f64>,
}

/// Stacks the predicted-class CAMs of the samples predicted as `class_index`,
/// in input order.
pub fn collect_cams(model: &Model, samples: &[PreparedSample], class_index: usize) -> Result<CamMatrix> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("no samples to collect CAMs from"));
    }
    let cams = samples
        .par_iter()
        .map(|s| cam_for_prediction(model, &s.sample_id, &s.input))
        .collect::<Result<Vec<_>>>()?;
    let (ids, rows): (Vec<_>, Vec<_>) = cams
        .into_iter()
        .filter(|c| c.class_index == class_index)
        .map(|c| (c.sample_id, c.normalized))
        .unzip();
    if rows.is_empty() {
        return Err(Error::EmptyClass(class_index));
    }
    CamMatrix::new(class_index, ids, rows)
}

/// One matrix per class index (`None` for classes nothing is predicted as),
/// from a single pass over the samples.
pub fn collect_all_classes(model: &Model, samples: &[PreparedSample]) -> Result<Vec<Option<CamMatrix>>> {
    let cams = samples
        .par_iter()
        .map(|s| cam_for_prediction(model, &s.sample_id, &s.input))
        .collect::<Result<Vec<_>>>()?;
    let num_classes = model.config().num_classes;
    let mut grouped: Vec<(Vec<String>, Vec<Vec<f64>>)> = vec![(Vec::new(), Vec::new()); num_classes];
    for cam in cams {
        let slot = &mut grouped[cam.class_index];
        slot.0.push(cam.sample_id);
        slot.1.push(cam.normalized);
    }
    grouped
        .into_iter()
        .enumerate()
        .map(|(c, (ids, rows))| {
            if rows.is_empty() {
                Ok(None)
            } else {
                CamMatrix::new(c, ids, rows).map(Some)
            }
        })
        .collect()
}

fn reduce_column(column: &mut [f64], method: AggregationMethod) -> Result<f64> {
    let (lo, hi) = column
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let value = match method {
        AggregationMethod::Mean => column.iter().sum::<f64>() / column.len() as f64,
        AggregationMethod::Median => {
            // lower middle for even n, so the result is always an observed value
            column.sort_by(f64::total_cmp);
            column[(column.len() - 1) / 2]
        }
        AggregationMethod::KdeMode => kde_mode(column, DEFAULT_GRID_POINTS)?,
    };
    Ok(value.clamp(lo, hi))
}

pub fn aggregate_impact(matrix: &CamMatrix, method: AggregationMethod) -> Result<Vec<f64>> {
    (0..matrix.length())
        .into_par_iter()
        .map(|j| reduce_column(&mut matrix.column(j), method))
        .collect()
}

pub fn variability(matrix: &CamMatrix, method: VariabilityMethod) -> Vec<f64> {
    (0..matrix.length())
        .into_par_iter()
        .map(|j| column_variability(&matrix.column(j), method))
        .collect()
}

pub fn build_aggregated_cam(
    matrix: &CamMatrix,
    agg_method: AggregationMethod,
    var_method: VariabilityMethod,
) -> Result<AggregatedCam> {
    Ok(AggregatedCam {
        class_index: matrix.class_index(),
        n_samples: matrix.n_samples(),
        agg_method,
        var_method,
        impact: aggregate_impact(matrix, agg_method)?,
        variability: variability(matrix, var_method),
    })
}

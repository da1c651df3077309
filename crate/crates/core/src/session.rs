//! Drill-down over one class's CAM matrix.
//!
//! A session holds an ordered stack of per-feature range filters. The active
//! subset is every row whose normalized CAM value lies inside each filter's
//! inclusive range; re-aggregating that subset gives a sub-global CAM.
//! Filters that would leave nothing selected are rejected and the session is
//! left as it was.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::aggregate::{build_aggregated_cam, AggregatedCam, AggregationMethod, CamMatrix, VariabilityMethod};
use crate::error::{Error, Result};

pub const DEFAULT_HISTOGRAM_BINS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterStep {
    pub feature_index: usize,
    pub lo: f64,
    pub hi: f64,
}

impl FilterStep {
    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Annotation {
    Interesting,
    Irrelevant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramView {
    pub feature_index: usize,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Enough to replay a drill-down against the same matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionExport {
    pub class_index: usize,
    pub filters: Vec<FilterStep>,
    pub active_ids: Vec<String>,
    pub annotations: BTreeMap<usize, Annotation>,
}

#[derive(Debug, Clone)]
pub struct Session {
    matrix: Arc<CamMatrix>,
    filters: Vec<FilterStep>,
    active: Vec<usize>,
    annotations: BTreeMap<usize, Annotation>,
}

impl Session {
    pub fn new(matrix: Arc<CamMatrix>) -> Self {
        let active = (0..matrix.n_samples()).collect();
        Self { matrix, filters: Vec::new(), active, annotations: BTreeMap::new() }
    }

    /// Rebuilds a session from an export, re-applying its filters in order.
    pub fn replay(matrix: Arc<CamMatrix>, export: &SessionExport) -> Result<Self> {
        if export.class_index != matrix.class_index() {
            return Err(Error::InvalidConfig(format!(
                "session for class {} cannot replay on class {}",
                export.class_index,
                matrix.class_index()
            )));
        }
        let mut session = Self::new(matrix);
        for f in &export.filters {
            session.apply_filter(f.feature_index, f.lo, f.hi)?;
        }
        for (&feature, &status) in &export.annotations {
            session.annotate(feature, Some(status))?;
        }
        Ok(session)
    }

    pub fn class_index(&self) -> usize {
        self.matrix.class_index()
    }

    pub fn matrix(&self) -> &CamMatrix {
        &self.matrix
    }

    pub fn filters(&self) -> &[FilterStep] {
        &self.filters
    }

    /// Row indices of the active subset, ascending.
    pub fn active_rows(&self) -> &[usize] {
        &self.active
    }

    pub fn active_ids(&self) -> Vec<String> {
        self.active.iter().map(|&r| self.matrix.sample_ids()[r].clone()).collect()
    }

    pub fn annotations(&self) -> &BTreeMap<usize, Annotation> {
        &self.annotations
    }

    fn check_feature(&self, feature: usize) -> Result<()> {
        if feature >= self.matrix.length() {
            return Err(Error::FeatureOutOfRange { feature, length: self.matrix.length() });
        }
        Ok(())
    }

    fn recompute(&mut self) {
        let m = &self.matrix;
        self.active = (0..m.n_samples())
            .filter(|&r| self.filters.iter().all(|f| f.contains(m.value(r, f.feature_index))))
            .collect();
    }

    /// Equal-width histogram of one feature over the active subset. The span
    /// is the subset's `[min, max]`; the last bin is closed on the right. A
    /// constant feature yields a single bin holding every sample.
    pub fn histogram(&self, feature: usize, bins: usize) -> Result<HistogramView> {
        self.check_feature(feature)?;
        if bins == 0 {
            return Err(Error::InvalidConfig("histogram needs at least one bin".into()));
        }
        if self.active.is_empty() {
            return Err(Error::EmptySelection);
        }
        let values: Vec<f64> = self.active.iter().map(|&r| self.matrix.value(r, feature)).collect();
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        if !(hi > lo) {
            // widen to one requested bin's width over the [-1, 1] domain
            let half = 1.0 / bins as f64;
            return Ok(HistogramView {
                feature_index: feature,
                bin_edges: vec![lo - half, lo + half],
                counts: vec![values.len()],
            });
        }
        let width = (hi - lo) / bins as f64;
        let mut bin_edges: Vec<f64> = (0..bins).map(|b| lo + width * b as f64).collect();
        bin_edges.push(hi);
        let mut counts = vec![0usize; bins];
        for v in values {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Ok(HistogramView { feature_index: feature, bin_edges, counts })
    }

    /// Pushes a filter. On an empty result the session is left unchanged.
    pub fn apply_filter(&mut self, feature: usize, lo: f64, hi: f64) -> Result<()> {
        self.check_feature(feature)?;
        if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo < -1.0 || hi > 1.0 {
            return Err(Error::InvalidRange { lo, hi });
        }
        let step = FilterStep { feature_index: feature, lo, hi };
        let narrowed: Vec<usize> =
            self.active.iter().copied().filter(|&r| step.contains(self.matrix.value(r, feature))).collect();
        if narrowed.is_empty() {
            return Err(Error::EmptySelection);
        }
        self.filters.push(step);
        self.active = narrowed;
        Ok(())
    }

    /// Removes the most recent filter; no-op on an empty stack.
    pub fn pop_filter(&mut self) -> Option<FilterStep> {
        let popped = self.filters.pop();
        if popped.is_some() {
            self.recompute();
        }
        popped
    }

    pub fn reset(&mut self) {
        self.filters.clear();
        self.recompute();
    }

    pub fn subglobal_cam(&self, agg: AggregationMethod, var: VariabilityMethod) -> Result<AggregatedCam> {
        if self.active.len() == self.matrix.n_samples() {
            return build_aggregated_cam(&self.matrix, agg, var);
        }
        build_aggregated_cam(&self.matrix.select_rows(&self.active)?, agg, var)
    }

    /// Sets (`Some`) or clears (`None`) a feature's annotation.
    pub fn annotate(&mut self, feature: usize, status: Option<Annotation>) -> Result<()> {
        self.check_feature(feature)?;
        match status {
            Some(s) => {
                self.annotations.insert(feature, s);
            }
            None => {
                self.annotations.remove(&feature);
            }
        }
        Ok(())
    }

    pub fn export(&self) -> SessionExport {
        SessionExport {
            class_index: self.class_index(),
            filters: self.filters.clone(),
            active_ids: self.active_ids(),
            annotations: self.annotations.clone(),
        }
    }
}

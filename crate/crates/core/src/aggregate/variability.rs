//! Dispersion of one feature's impact values, mapped to `[0, 1]`.
//!
//! Values are min-max rescaled to `[0, 1]` per column first; a constant
//! column has variability 0 under every measure. Population variance and
//! standard deviation of `[0, 1]` data peak at 0.25 and 0.5, so they are
//! divided by those maxima.

use super::VariabilityMethod;

pub const ENTROPY_BINS: usize = 16;

fn rescale(column: &[f64]) -> Option<Vec<f64>> {
    let (lo, hi) = column
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !(hi > lo) {
        return None;
    }
    let span = hi - lo;
    Some(column.iter().map(|x| ((x - lo) / span).clamp(0.0, 1.0)).collect())
}

fn population_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

/// Shannon entropy of a 16-bin histogram over `[0, 1]`, divided by `ln 16`.
fn histogram_entropy(x: &[f64]) -> f64 {
    let mut counts = [0usize; ENTROPY_BINS];
    for &v in x {
        let bin = ((v * ENTROPY_BINS as f64) as usize).min(ENTROPY_BINS - 1);
        counts[bin] += 1;
    }
    let n = x.len() as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    h / (ENTROPY_BINS as f64).ln()
}

/// Mean absolute difference form `sum_ij |x_i - x_j| / (2 n^2 mean)`,
/// computed from sorted values in O(n log n).
fn gini(x: &[f64]) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    if mean == 0.0 {
        return 0.0;
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    // sum_ij |x_i - x_j| = 2 * sum_i (2i - n + 1) * x_(i)
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| (2.0 * i as f64 - n as f64 + 1.0) * v)
        .sum();
    2.0 * weighted / (2.0 * (n * n) as f64 * mean)
}

pub fn column_variability(column: &[f64], method: VariabilityMethod) -> f64 {
    let Some(x) = rescale(column) else {
        return 0.0;
    };
    let value = match method {
        VariabilityMethod::Variance => population_variance(&x) / 0.25,
        VariabilityMethod::Stddev => population_variance(&x).sqrt() / 0.5,
        VariabilityMethod::Entropy => histogram_entropy(&x),
        VariabilityMethod::Gini => gini(&x),
    };
    value.clamp(0.0, 1.0)
}

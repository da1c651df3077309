//! Mode of a Gaussian kernel density estimate.

use crate::error::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 512;

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Silverman's rule of thumb: `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`,
/// with the sample standard deviation.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    0.9 * var.sqrt().min(iqr / 1.34) * (n as f64).powf(-0.2)
}

/// Most frequent exact value; ties go to the smallest.
fn most_frequent(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mut best, mut best_count) = (sorted[0], 0);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i > best_count {
            best = sorted[i];
            best_count = j - i;
        }
        i = j;
    }
    best
}

/// Argmax of a Gaussian KDE (Silverman bandwidth) evaluated on
/// `grid_points` evenly spaced points spanning `[min, max]` of the data.
/// Degenerate spreads (zero bandwidth or a single distinct value) return
/// the most frequent value instead.
pub fn kde_mode(values: &[f64], grid_points: usize) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("kde_mode over no values"));
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("kde_mode input".into()));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let h = silverman_bandwidth(values);
    if lo == hi || h <= 0.0 || !h.is_finite() {
        return Ok(most_frequent(values));
    }

    let points = grid_points.max(2);
    let step = (hi - lo) / (points - 1) as f64;
    let inv_h = 1.0 / h;
    let mut best = (lo, f64::NEG_INFINITY);
    for g in 0..points {
        let x = if g == points - 1 { hi } else { lo + step * g as f64 };
        // constant factors do not move the argmax
        let density: f64 = values
            .iter()
            .map(|&v| {
                let z = (x - v) * inv_h;
                (-0.5 * z * z).exp()
            })
            .sum();
        if density > best.1 {
            best = (x, density);
        }
    }
    Ok(best.0)
}

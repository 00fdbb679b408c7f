//! Clustering and segmentation quality metrics.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::data::{Labels, PointSet};
use crate::engine::ModeResult;
use crate::error::{Error, Result};
use crate::geom::euclid;
use crate::scalar::Real;

/// Metric summary emitted as single-line JSON with this exact key order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    /// Rand index in [0, 1]; `null` when not computed.
    pub pri: Option<f64>,
    pub n_clusters_found: usize,
    /// Mean distance from each truth mean to its nearest found mode;
    /// `null` when not computed.
    pub mode_error: Option<f64>,
}

impl MetricReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// The Rand index of two labelings: the fraction of point pairs on which
/// they agree (same/same or different/different).
///
/// Computed through contingency-table counts; `tests` hold an independent
/// O(n²) pair enumeration.
pub fn pri(a: &Labels, b: &Labels) -> Result<f64> {
    let n = a.len();
    if n != b.len() {
        return Err(Error::LabelLengthMismatch { a: n, b: b.len() });
    }
    if n < 2 {
        return Err(Error::TooFewPoints);
    }

    let mut cells: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&la, &lb) in a.as_slice().iter().zip(b.as_slice()) {
        *cells.entry((la, lb)).or_insert(0) += 1;
        *rows.entry(la).or_insert(0) += 1;
        *cols.entry(lb).or_insert(0) += 1;
    }
    let choose2 = |m: u64| (m * (m - 1)) / 2;
    let total = choose2(n as u64);
    let cell_pairs: u64 = cells.values().map(|&c| choose2(c)).sum();
    let row_pairs: u64 = rows.values().map(|&c| choose2(c)).sum();
    let col_pairs: u64 = cols.values().map(|&c| choose2(c)).sum();
    // agreements = same/same + different/different
    let agree = total + 2 * cell_pairs - row_pairs - col_pairs;
    Ok(agree as f64 / total as f64)
}

/// Mean over truth means of the distance to the nearest found mode.
pub fn mode_localization_error<T: Real>(found: &PointSet<T>, truth: &PointSet<T>) -> Result<f64> {
    if found.is_empty() || truth.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut sum = 0.0f64;
    for t in truth.iter() {
        let nearest = found
            .iter()
            .map(|f| euclid(t, f))
            .fold(T::infinity(), |acc, v| if v < acc { v } else { acc });
        sum += nearest.to_f64().expect("finite distance");
    }
    Ok(sum / truth.len() as f64)
}

/// Number of distinct labels in a clustering result.
pub fn count_clusters<T>(result: &ModeResult<T>) -> usize {
    result.labels.n_clusters()
}

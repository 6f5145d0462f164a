//! Lag-window regression datasets and disjoint segmentations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Component;

/// Supervised pairs `(x[j-a..j], x[j])` for `j = a..T`.
///
/// Windows are ordered oldest first, so the last element of a window is the
/// observation immediately preceding its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagDataset {
    pub order: usize,
    pub windows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub source: Component,
}

impl LagDataset {
    /// Series index of the target in row `row`.
    pub fn target_index(&self, row: usize) -> usize {
        row + self.order
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

pub fn build_lag_dataset(x: &[f64], order: usize, source: Component) -> Result<LagDataset> {
    if order == 0 {
        return Err(Error::InvalidArgument("lag order must be positive".into()));
    }
    if order >= x.len() {
        return Err(Error::OrderTooLarge { order, len: x.len() });
    }
    let windows = x.windows(order).take(x.len() - order).map(<[f64]>::to_vec).collect();
    let targets = x[order..].to_vec();
    Ok(LagDataset { order, windows, targets, source })
}

/// Disjoint consecutive pieces of length `segment_len`; the remainder is dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSet {
    pub segment_len: usize,
    pub segments: Vec<Vec<f64>>,
    pub source: Component,
}

impl SegmentSet {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

pub fn segment(x: &[f64], segment_len: usize, source: Component) -> Result<SegmentSet> {
    if segment_len < 2 {
        return Err(Error::InvalidArgument(format!(
            "segment length must be at least 2, got {segment_len}"
        )));
    }
    if segment_len > x.len() {
        return Err(Error::SegmentTooLong { segment: segment_len, len: x.len() });
    }
    let segments = x.chunks_exact(segment_len).map(<[f64]>::to_vec).collect();
    Ok(SegmentSet { segment_len, segments, source })
}

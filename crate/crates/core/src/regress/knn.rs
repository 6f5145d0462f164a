use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean target of the `k` nearest standardized training rows (Euclidean).
/// Equal distances are resolved toward the lower training index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl KnnModel {
    pub(super) fn fit(rows: Vec<Vec<f64>>, targets: Vec<f64>, k: usize) -> Result<Self> {
        if k > rows.len() {
            return Err(Error::InsufficientData(format!("k = {k} exceeds {} training rows", rows.len())));
        }
        Ok(Self { k, rows, targets })
    }

    pub fn neighbors(&self, z: &[f64]) -> Vec<usize> {
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, cmp);
            dist.truncate(self.k);
        }
        dist.sort_by(cmp);
        dist.into_iter().map(|(_, i)| i).collect()
    }

    pub fn predict_row(&self, z: &[f64]) -> f64 {
        let idx = self.neighbors(z);
        idx.iter().map(|&i| self.targets[i]).sum::<f64>() / idx.len() as f64
    }
}

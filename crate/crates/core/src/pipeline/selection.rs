use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::seeds::cell_seed;
use crate::dataset::{build_lag_dataset, segment};
use crate::error::{Error, Result};
use crate::fen::{train, FenModel, TrainConfig, TrainReport};
use crate::imaging::{build_classification_dataset, ImagingMethod, ImagingOptions};
use crate::series::{CenterRangeSeries, Component};

/// Accuracy margin within which candidates count as equally good.
pub const SELECTION_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub depth: usize,
    pub segment_len: usize,
    pub accuracy: f64,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    #[serde(flatten)]
    pub score: CandidateScore,
    pub seed: u64,
    pub images: usize,
    pub report: TrainReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FenSelection {
    /// Sorted by `(depth, segment_len)`.
    pub candidates: Vec<CandidateResult>,
    pub chosen: CandidateScore,
}

/// Index of the preferred candidate: highest accuracy, and among those within
/// [`SELECTION_TOLERANCE`] of it the smallest depth, then the earliest best
/// epoch, then the shortest segment length.
pub fn select_candidate(scores: &[CandidateScore]) -> Option<usize> {
    let best = scores.iter().map(|s| s.accuracy).fold(f64::NEG_INFINITY, f64::max);
    scores
        .iter()
        .enumerate()
        .filter(|(_, s)| s.accuracy >= best - SELECTION_TOLERANCE - 1e-12)
        .min_by_key(|(_, s)| (s.depth, s.best_epoch, s.segment_len))
        .map(|(i, _)| i)
}

/// Trains one network per `(depth, segment length)` on `series` and selects one.
pub fn select_network_on(series: &CenterRangeSeries, cfg: &ExperimentConfig) -> Result<(FenSelection, FenModel)> {
    let mut grid: Vec<(usize, usize)> = Vec::new();
    for &depth in &cfg.depths {
        for &delta in &cfg.segment_lengths {
            if !grid.contains(&(depth, delta)) {
                grid.push((depth, delta));
            }
        }
    }
    grid.sort_unstable();
    for &(_, delta) in &grid {
        if series.len() / delta < 2 {
            return Err(Error::InsufficientData(format!(
                "segment length {delta} yields fewer than 2 segments from {} observations",
                series.len()
            )));
        }
    }
    let trained: Vec<(CandidateResult, FenModel)> = grid
        .par_iter()
        .map(|&(depth, delta)| {
            let c = segment(series.center(), delta, Component::Center)?;
            let r = segment(series.range(), delta, Component::Range)?;
            let set = build_classification_dataset(&c, &r, &cfg.imaging)?;
            let seed = cell_seed(cfg.seed, &[0xa1, depth as u64, delta as u64]);
            let tc = TrainConfig { seed, ..cfg.train.clone() };
            let (model, report) = train(&set, &cfg.network.architecture(depth), &tc)?;
            let score =
                CandidateScore { depth, segment_len: delta, accuracy: report.best_accuracy, best_epoch: report.best_epoch };
            Ok((CandidateResult { score, seed, images: set.len(), report }, model))
        })
        .collect::<Result<_>>()?;
    let scores: Vec<CandidateScore> = trained.iter().map(|(c, _)| c.score).collect();
    let idx = select_candidate(&scores).expect("grid is non-empty");
    let chosen = scores[idx];
    let mut candidates = Vec::with_capacity(trained.len());
    let mut model = None;
    for (i, (cand, m)) in trained.into_iter().enumerate() {
        if i == idx {
            model = Some(m);
        }
        candidates.push(cand);
    }
    Ok((FenSelection { candidates, chosen }, model.expect("chosen index is in range")))
}

/// Extracted-feature regression data: one row per lag window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDataset {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub order: usize,
    pub method: ImagingMethod,
    pub source: Component,
}

impl FeatureDataset {
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

/// Images each lag window of `x` with `method` and maps it through the network.
pub fn extract_feature_dataset(
    model: &FenModel,
    x: &[f64],
    order: usize,
    source: Component,
    method: ImagingMethod,
    opts: &ImagingOptions,
) -> Result<FeatureDataset> {
    let lag = build_lag_dataset(x, order, source)?;
    let features = lag
        .windows
        .par_iter()
        .map(|w| model.extract_features(&opts.encode(method, w)?.normalized()))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureDataset { features, targets: lag.targets, order, method, source })
}

/// Center and range feature datasets for one encoding.
pub fn build_feature_datasets(
    model: &FenModel,
    series: &CenterRangeSeries,
    orders: (usize, usize),
    method: ImagingMethod,
    opts: &ImagingOptions,
) -> Result<(FeatureDataset, FeatureDataset)> {
    Ok((
        extract_feature_dataset(model, series.center(), orders.0, Component::Center, method, opts)?,
        extract_feature_dataset(model, series.range(), orders.1, Component::Range, method, opts)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{generate_dgp, DgpKind, DgpSpec};
    use crate::fen::FenArchitecture;

    fn score(depth: usize, segment_len: usize, accuracy: f64, best_epoch: usize) -> CandidateScore {
        CandidateScore { depth, segment_len, accuracy, best_epoch }
    }

    #[test]
    fn selection_rules() {
        assert_eq!(select_candidate(&[score(3, 45, 0.99, 2), score(1, 45, 0.99, 9)]), Some(1));
        assert_eq!(select_candidate(&[score(3, 45, 1.0, 2), score(1, 45, 0.80, 1)]), Some(0));
        assert_eq!(select_candidate(&[score(2, 45, 0.995, 2), score(2, 30, 1.0, 5)]), Some(0));
        assert_eq!(select_candidate(&[score(2, 50, 1.0, 4), score(2, 30, 1.0, 4)]), Some(1));
        assert_eq!(select_candidate(&[score(1, 30, 0.98, 1), score(2, 30, 1.0, 1)]), Some(1));
        assert_eq!(select_candidate(&[]), None);
    }

    #[test]
    fn selection_ignores_enumeration_order() {
        let scores = [score(2, 45, 0.97, 3), score(1, 30, 0.965, 4), score(1, 55, 0.97, 2), score(3, 40, 0.9, 1)];
        let chosen = scores[select_candidate(&scores).unwrap()];
        let mut rev = scores;
        rev.reverse();
        assert_eq!(rev[select_candidate(&rev).unwrap()], chosen);
        assert_eq!(chosen, score(1, 55, 0.97, 2));
    }

    #[test]
    fn feature_rows_and_errors() {
        let s = generate_dgp(&DgpSpec::new(DgpKind::C1, 200, 3)).unwrap();
        let arch = FenArchitecture { width: 4, feature_dim: 8, ..FenArchitecture::with_blocks(1) };
        let model = FenModel::new(arch, 1).unwrap();
        let opts = ImagingOptions::default();
        let (fc, fr) = build_feature_datasets(&model, &s, (5, 3), ImagingMethod::Gasf, &opts).unwrap();
        assert_eq!((fc.len(), fr.len()), (195, 197));
        assert!(fc.features.iter().all(|f| f.len() == 8));
        assert_eq!(fc.target_index(0), 5);
        assert_eq!(fc.targets[0], s.center()[5]);
        let other = extract_feature_dataset(&model, s.center(), 5, Component::Center, ImagingMethod::Mtf, &opts).unwrap();
        assert_ne!(other.features, fc.features);
        assert!(matches!(
            extract_feature_dataset(&model, s.center(), 200, Component::Center, ImagingMethod::Rp, &opts),
            Err(Error::OrderTooLarge { .. })
        ));
    }
}

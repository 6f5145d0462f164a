use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{FenArchitecture, FenModel, NUM_CLASSES};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::imaging::{GrayImage, LabeledImageSet};

/// Minimum number of samples per class accepted by [`train`].
pub const MIN_PER_CLASS: usize = 4;

const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    SgdMomentum,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    /// Fraction of each class used for training; the rest is the test split.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 16,
            learning_rate: 0.003,
            optimizer: Optimizer::Adam,
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 || self.batch_size < 1 {
            return Err(Error::InvalidArgument("epochs and batch size must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean mini-batch cross-entropy during the epoch.
    pub train_loss: f64,
    /// Held-out accuracy in inference mode after the epoch.
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch with the highest test accuracy (earliest on ties).
    pub best_epoch: usize,
    pub best_accuracy: f64,
    /// Training loss recorded at the best epoch.
    pub best_loss: f64,
    pub train_size: usize,
    pub test_size: usize,
}

/// Per-class shuffled split; every class keeps at least one sample on each side.
pub fn stratified_split(labels: &[u8], train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for label in 1..=NUM_CLASSES as u8 {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let n_train = ((idx.len() as f64 * train_fraction).round() as usize).clamp(1, idx.len().saturating_sub(1).max(1));
        test.extend_from_slice(&idx[n_train..]);
        idx.truncate(n_train);
        train.extend(idx);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

struct OptimizerState {
    kind: Optimizer,
    lr: f64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: i32,
}

impl OptimizerState {
    fn new(kind: Optimizer, lr: f64, params: &[Tensor]) -> Self {
        let zeros = || params.iter().map(|t| vec![0.0; t.len()]).collect();
        Self { kind, lr, first: zeros(), second: zeros(), step: 0 }
    }

    fn apply(&mut self, params: &mut [Tensor], grads: &[Tensor]) {
        self.step += 1;
        match self.kind {
            Optimizer::SgdMomentum => {
                for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.first) {
                    for i in 0..p.data.len() {
                        v[i] = 0.9 * v[i] + g.data[i];
                        p.data[i] -= self.lr * v[i];
                    }
                }
            }
            Optimizer::Adam => {
                let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
                let c1 = 1.0 - b1.powi(self.step);
                let c2 = 1.0 - b2.powi(self.step);
                for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.first).zip(&mut self.second) {
                    for i in 0..p.data.len() {
                        m[i] = b1 * m[i] + (1.0 - b1) * g.data[i];
                        v[i] = b2 * v[i] + (1.0 - b2) * g.data[i] * g.data[i];
                        p.data[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                    }
                }
            }
        }
    }
}

/// Fraction of `indices` classified correctly in inference mode.
pub fn accuracy(model: &FenModel, images: &[&GrayImage], labels: &[u8]) -> Result<f64> {
    if images.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (img, &label) in images.iter().zip(labels) {
        if model.predict_label(img)? == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / images.len() as f64)
}

/// Trains a fresh network on `dataset` and returns the best-epoch snapshot.
pub fn train(dataset: &LabeledImageSet, arch: &FenArchitecture, cfg: &TrainConfig) -> Result<(FenModel, TrainReport)> {
    cfg.validate()?;
    let counts = dataset.class_counts();
    if let Some(k) = counts.iter().position(|&n| n < MIN_PER_CLASS) {
        return Err(Error::InsufficientData(format!(
            "class {} has {} samples, need at least {MIN_PER_CLASS}",
            k + 1,
            counts[k]
        )));
    }
    let labels: Vec<u8> = dataset.items.iter().map(|it| it.label()).collect();
    let images: Vec<&GrayImage> = dataset.items.iter().map(|it| &it.image).collect();
    let (train_idx, test_idx) = stratified_split(&labels, cfg.train_fraction, cfg.seed);
    let test_images: Vec<&GrayImage> = test_idx.iter().map(|&i| images[i]).collect();
    let test_labels: Vec<u8> = test_idx.iter().map(|&i| labels[i]).collect();

    let mut model = FenModel::new(arch.clone(), cfg.seed)?;
    let mut opt = OptimizerState::new(cfg.optimizer, cfg.learning_rate, &model.params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5DEE_CE66_D1CE_5EED);
    let mut order = train_idx.clone();
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(FenModel, usize, f64, f64)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch_images: Vec<&GrayImage> = chunk.iter().map(|&i| images[i]).collect();
            let batch_labels: Vec<u8> = chunk.iter().map(|&i| labels[i]).collect();
            let (loss, grads, stats) = model.loss_grad_stats(&batch_images, &batch_labels)?;
            if !loss.is_finite() {
                return Err(Error::InvalidArgument(format!("training diverged at epoch {epoch}")));
            }
            let plane = stats_count(&model, batch_images[0].side()) * chunk.len();
            model.update_running_stats(&stats, BN_MOMENTUM, plane);
            opt.apply(model.params_mut(), &grads);
            loss_sum += loss;
            batches += 1;
        }
        model.trained_epochs = epoch;
        let train_loss = loss_sum / batches as f64;
        let test_accuracy = accuracy(&model, &test_images, &test_labels)?;
        records.push(EpochRecord { epoch, train_loss, test_accuracy });
        if best.as_ref().is_none_or(|(_, _, acc, _)| test_accuracy > *acc) {
            best = Some((model.clone(), epoch, test_accuracy, train_loss));
        }
    }

    let (model, best_epoch, best_accuracy, best_loss) = best.expect("at least one epoch");
    let report = TrainReport {
        epochs: records,
        best_epoch,
        best_accuracy,
        best_loss,
        train_size: train_idx.len(),
        test_size: test_idx.len(),
    };
    Ok((model, report))
}

/// Spatial positions per channel after the stem for an input of `side`.
fn stats_count(model: &FenModel, side: usize) -> usize {
    let s = model.architecture().stem_stride;
    let out = (side - 1) / s + 1;
    out * out
}

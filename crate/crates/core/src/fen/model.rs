use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::layers::{self, BnCache, ConvShape, KERNEL};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::imaging::GrayImage;

pub const NUM_CLASSES: usize = 4;

/// Shape of one candidate network: a strided 3x3 stem, `blocks` residual
/// blocks at constant `width`, global average pooling, a ReLU embedding of
/// size `feature_dim` (the extracted features) and a 4-way linear head.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FenArchitecture {
    pub blocks: usize,
    pub width: usize,
    #[serde(default = "default_stem_stride")]
    pub stem_stride: usize,
    pub feature_dim: usize,
    #[serde(default = "default_classes")]
    pub classes: usize,
}

fn default_stem_stride() -> usize {
    2
}

fn default_classes() -> usize {
    NUM_CLASSES
}

impl Default for FenArchitecture {
    fn default() -> Self {
        Self { blocks: 2, width: 16, stem_stride: 2, feature_dim: 64, classes: NUM_CLASSES }
    }
}

impl FenArchitecture {
    pub fn with_blocks(blocks: usize) -> Self {
        Self { blocks, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks < 1 {
            return Err(Error::InvalidArgument("architecture needs at least one block".into()));
        }
        if self.width < 1 || self.stem_stride < 1 {
            return Err(Error::InvalidArgument("width and stem stride must be positive".into()));
        }
        if self.feature_dim < 8 {
            return Err(Error::InvalidArgument(format!(
                "feature_dim must be at least 8, got {}",
                self.feature_dim
            )));
        }
        if self.classes != NUM_CLASSES {
            return Err(Error::InvalidArgument(format!("classes must be {NUM_CLASSES}")));
        }
        Ok(())
    }

    /// Parameter names and shapes in declaration order.
    pub fn parameter_layout(&self) -> Vec<(String, Vec<usize>)> {
        let c = self.width;
        let mut out = vec![
            ("stem.conv.weight".to_string(), vec![c, 1, KERNEL, KERNEL]),
            ("stem.bn.gamma".to_string(), vec![c]),
            ("stem.bn.beta".to_string(), vec![c]),
        ];
        for b in 0..self.blocks {
            for (suffix, shape) in [
                ("conv1.weight", vec![c, c, KERNEL, KERNEL]),
                ("bn1.gamma", vec![c]),
                ("bn1.beta", vec![c]),
                ("conv2.weight", vec![c, c, KERNEL, KERNEL]),
                ("bn2.gamma", vec![c]),
                ("bn2.beta", vec![c]),
            ] {
                out.push((format!("block{b}.{suffix}"), shape));
            }
        }
        out.push(("embed.weight".into(), vec![self.feature_dim, c]));
        out.push(("embed.bias".into(), vec![self.feature_dim]));
        out.push(("head.weight".into(), vec![self.classes, self.feature_dim]));
        out.push(("head.bias".into(), vec![self.classes]));
        out
    }

    /// Running-statistics buffer names and shapes in declaration order.
    pub fn buffer_layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut norms = vec!["stem.bn".to_string()];
        for b in 0..self.blocks {
            norms.push(format!("block{b}.bn1"));
            norms.push(format!("block{b}.bn2"));
        }
        norms
            .into_iter()
            .flat_map(|n| {
                [(format!("{n}.running_mean"), vec![self.width]), (format!("{n}.running_var"), vec![self.width])]
            })
            .collect()
    }
}

// Parameter indices within `parameter_layout`.
const STEM_CONV: usize = 0;
const STEM_GAMMA: usize = 1;
const STEM_BETA: usize = 2;
const PER_BLOCK: usize = 6;

fn block_base(b: usize) -> usize {
    3 + b * PER_BLOCK
}

/// Whether normalization layers use batch or running statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Inference,
}

/// Residual CNN classifier whose penultimate activations are the features.
#[derive(Debug, Clone, PartialEq)]
pub struct FenModel {
    pub(crate) arch: FenArchitecture,
    pub(crate) params: Vec<Tensor>,
    pub(crate) buffers: Vec<Tensor>,
    pub trained_epochs: usize,
    pub rng_seed: u64,
    /// Free-form run metadata (config hash, tool version) stored with the weights.
    pub provenance: BTreeMap<String, String>,
}

/// Output of a single-image forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub logits: Vec<f64>,
    pub features: Vec<f64>,
}

impl FenModel {
    /// He-normal convolution and embedding weights, unit/zero normalization
    /// affine terms, and a small random head.
    pub fn new(arch: FenArchitecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = arch
            .parameter_layout()
            .into_iter()
            .map(|(name, shape)| {
                let n: usize = shape.iter().product();
                let data = if name.ends_with(".gamma") {
                    vec![1.0; n]
                } else if name.ends_with(".beta") || name.ends_with(".bias") {
                    vec![0.0; n]
                } else {
                    let fan_in: usize = shape[1..].iter().product();
                    let std = if name.starts_with("head") {
                        (1.0 / fan_in as f64).sqrt()
                    } else {
                        (2.0 / fan_in as f64).sqrt()
                    };
                    let normal = Normal::new(0.0, std).expect("positive std");
                    (0..n).map(|_| normal.sample(&mut rng)).collect()
                };
                Tensor { shape, data }
            })
            .collect();
        let buffers = arch
            .buffer_layout()
            .into_iter()
            .map(|(name, shape)| {
                let fill = if name.ends_with("running_var") { 1.0 } else { 0.0 };
                Tensor::filled(&shape, fill)
            })
            .collect();
        Ok(Self { arch, params, buffers, trained_epochs: 0, rng_seed: seed, provenance: BTreeMap::new() })
    }

    pub fn architecture(&self) -> &FenArchitecture {
        &self.arch
    }

    pub fn feature_dim(&self) -> usize {
        self.arch.feature_dim
    }

    /// Named parameters in declaration order.
    pub fn parameters(&self) -> Vec<(String, &Tensor)> {
        self.arch.parameter_layout().into_iter().map(|(n, _)| n).zip(&self.params).collect()
    }

    pub fn buffers(&self) -> Vec<(String, &Tensor)> {
        self.arch.buffer_layout().into_iter().map(|(n, _)| n).zip(&self.buffers).collect()
    }

    pub fn parameter_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        let idx = self.arch.parameter_layout().iter().position(|(n, _)| n == name)?;
        self.params.get_mut(idx)
    }

    pub(crate) fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    /// Sets the classification head to zero so every prediction is uniform.
    pub fn zero_head(&mut self) {
        let n = self.params.len();
        self.params[n - 2].data.fill(0.0);
        self.params[n - 1].data.fill(0.0);
    }

    /// Zeroes both convolutions and both normalization affine terms of a block.
    pub fn zero_residual_branch(&mut self, block: usize) {
        let base = block_base(block);
        for p in &mut self.params[base..base + PER_BLOCK] {
            p.data.fill(0.0);
        }
    }

    fn p(&self, idx: usize) -> &[f64] {
        &self.params[idx].data
    }

    fn head_index(&self) -> usize {
        self.params.len() - 4
    }

    /// Inference-mode pass over one image.
    pub fn forward(&self, image: &GrayImage) -> Result<ForwardOutput> {
        let pass = self.run(&[image], Mode::Inference)?;
        Ok(ForwardOutput { logits: pass.logits, features: pass.features })
    }

    /// Penultimate activations for one image (inference mode).
    pub fn extract_features(&self, image: &GrayImage) -> Result<Vec<f64>> {
        Ok(self.forward(image)?.features)
    }

    /// Class probabilities for one image.
    pub fn predict_proba(&self, image: &GrayImage) -> Result<Vec<f64>> {
        Ok(layers::softmax(&self.forward(image)?.logits))
    }

    /// Inference-mode predicted label (1..=4) for one image.
    pub fn predict_label(&self, image: &GrayImage) -> Result<u8> {
        let logits = self.forward(image)?.logits;
        let best = logits
            .iter()
            .enumerate()
            .fold(0, |best, (k, &z)| if z > logits[best] { k } else { best });
        Ok(best as u8 + 1)
    }

    /// Mean cross-entropy over a batch and its gradient for every parameter,
    /// using batch statistics in the normalization layers.
    pub fn loss_and_grad(&self, images: &[&GrayImage], labels: &[u8]) -> Result<(f64, Vec<(String, Tensor)>)> {
        let (loss, grads, _) = self.loss_grad_stats(images, labels)?;
        let names = self.arch.parameter_layout().into_iter().map(|(n, _)| n);
        Ok((loss, names.zip(grads).collect()))
    }

    /// Like [`Self::loss_and_grad`] but returns unnamed gradients and the
    /// per-layer batch statistics `(mean, var)` for running-average updates.
    pub(crate) fn loss_grad_stats(
        &self,
        images: &[&GrayImage],
        labels: &[u8],
    ) -> Result<(f64, Vec<Tensor>, Vec<(Vec<f64>, Vec<f64>)>)> {
        if images.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        let classes = labels
            .iter()
            .map(|&l| match l {
                1..=4 => Ok(usize::from(l - 1)),
                _ => Err(Error::InvalidArgument(format!("label {l} outside 1..=4"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let pass = self.run(images, Mode::Train)?;
        let (loss, dlogits) = layers::cross_entropy(&pass.logits, &classes, self.arch.classes);
        let grads = self.backward(&pass, &dlogits);
        let stats = pass.bn.iter().map(|c| (c.mean.clone(), c.var.clone())).collect();
        Ok((loss, grads, stats))
    }

    fn run(&self, images: &[&GrayImage], mode: Mode) -> Result<Pass> {
        let first = images.first().ok_or_else(|| Error::ShapeMismatch("empty batch".into()))?;
        let side = first.side();
        if let Some(bad) = images.iter().find(|im| im.side() != side) {
            return Err(Error::ShapeMismatch(format!(
                "batch mixes image sides {side} and {}",
                bad.side()
            )));
        }
        let batch = images.len();
        let c = self.arch.width;
        let input: Vec<f64> = images.iter().flat_map(|im| im.pixels().iter().copied()).collect();

        let stem_shape =
            ConvShape { in_channels: 1, out_channels: c, height: side, width: side, stride: self.arch.stem_stride };
        let (h, w) = (stem_shape.out_height(), stem_shape.out_width());
        let plane = h * w;
        let block_shape = ConvShape { in_channels: c, out_channels: c, height: h, width: w, stride: 1 };

        let mut bn_caches = Vec::new();
        let mut norm_index = 0;
        let mut normalize = |x: &[f64], gamma: usize, beta: usize, caches: &mut Vec<BnCache>| -> Vec<f64> {
            let out = match mode {
                Mode::Train => {
                    let (y, cache) = layers::bn_forward_train(x, batch, c, plane, self.p(gamma), self.p(beta));
                    caches.push(cache);
                    y
                }
                Mode::Inference => layers::bn_forward_eval(
                    x,
                    c,
                    plane,
                    self.p(gamma),
                    self.p(beta),
                    &self.buffers[2 * norm_index].data,
                    &self.buffers[2 * norm_index + 1].data,
                ),
            };
            norm_index += 1;
            out
        };

        let stem_pre = layers::conv_forward(&input, batch, self.p(STEM_CONV), &stem_shape);
        let mut act = normalize(&stem_pre, STEM_GAMMA, STEM_BETA, &mut bn_caches);
        layers::relu(&mut act);

        let mut blocks = Vec::with_capacity(self.arch.blocks);
        for b in 0..self.arch.blocks {
            let base = block_base(b);
            let c1 = layers::conv_forward(&act, batch, self.p(base), &block_shape);
            let mut r1 = normalize(&c1, base + 1, base + 2, &mut bn_caches);
            layers::relu(&mut r1);
            let c2 = layers::conv_forward(&r1, batch, self.p(base + 3), &block_shape);
            let mut out = normalize(&c2, base + 4, base + 5, &mut bn_caches);
            out.iter_mut().zip(&act).for_each(|(o, x)| *o += x);
            layers::relu(&mut out);
            blocks.push(BlockCache { input: std::mem::replace(&mut act, out), r1 });
        }

        let pooled = layers::gap_forward(&act, plane);
        let hi = self.head_index();
        let mut features = layers::linear_forward(&pooled, batch, self.p(hi), self.p(hi + 1));
        layers::relu(&mut features);
        let logits = layers::linear_forward(&features, batch, self.p(hi + 2), self.p(hi + 3));

        Ok(Pass {
            batch,
            input,
            stem_shape,
            block_shape,
            stem_out: blocks.first().map(|b| b.input.clone()).unwrap_or_else(|| act.clone()),
            blocks,
            final_act: act,
            pooled,
            features,
            logits,
            bn: bn_caches,
        })
    }

    fn backward(&self, pass: &Pass, dlogits: &[f64]) -> Vec<Tensor> {
        let mut grads: Vec<Tensor> = self.params.iter().map(|t| Tensor::zeros(&t.shape)).collect();
        let batch = pass.batch;
        let c = self.arch.width;
        let plane = pass.block_shape.height * pass.block_shape.width;
        let hi = self.head_index();

        let (mut dfeat, dw, db) =
            layers::linear_backward(&pass.features, dlogits, batch, self.p(hi + 2), self.arch.classes);
        grads[hi + 2].data = dw;
        grads[hi + 3].data = db;
        layers::relu_backward(&mut dfeat, &pass.features);
        let (dpooled, dw, db) =
            layers::linear_backward(&pass.pooled, &dfeat, batch, self.p(hi), self.arch.feature_dim);
        grads[hi].data = dw;
        grads[hi + 1].data = db;

        let mut dact = layers::gap_backward(&dpooled, plane);
        let mut next_out = &pass.final_act;
        for (b, cache) in pass.blocks.iter().enumerate().rev() {
            let base = block_base(b);
            // out = relu(bn2(conv2(r1)) + input)
            layers::relu_backward(&mut dact, next_out);
            let (dc2, dg, dbeta) =
                layers::bn_backward(&dact, &pass.bn[1 + 2 * b + 1], batch, c, plane, self.p(base + 4));
            grads[base + 4].data = dg;
            grads[base + 5].data = dbeta;
            let (mut dr1, dw2) = layers::conv_backward(&cache.r1, &dc2, batch, self.p(base + 3), &pass.block_shape);
            grads[base + 3].data = dw2;
            layers::relu_backward(&mut dr1, &cache.r1);
            let (dc1, dg, dbeta) =
                layers::bn_backward(&dr1, &pass.bn[1 + 2 * b], batch, c, plane, self.p(base + 1));
            grads[base + 1].data = dg;
            grads[base + 2].data = dbeta;
            let (dinput, dw1) = layers::conv_backward(&cache.input, &dc1, batch, self.p(base), &pass.block_shape);
            grads[base].data = dw1;
            dact.iter_mut().zip(&dinput).for_each(|(a, d)| *a += d);
            next_out = &cache.input;
        }

        layers::relu_backward(&mut dact, &pass.stem_out);
        let (dstem, dg, dbeta) = layers::bn_backward(&dact, &pass.bn[0], batch, c, plane, self.p(STEM_GAMMA));
        grads[STEM_GAMMA].data = dg;
        grads[STEM_BETA].data = dbeta;
        let (_, dw) = layers::conv_backward(&pass.input, &dstem, batch, self.p(STEM_CONV), &pass.stem_shape);
        grads[STEM_CONV].data = dw;
        grads
    }

    /// Exponential running-average update of the normalization statistics.
    /// Variances are stored unbiased.
    pub(crate) fn update_running_stats(&mut self, stats: &[(Vec<f64>, Vec<f64>)], momentum: f64, count: usize) {
        let correction = if count > 1 { count as f64 / (count - 1) as f64 } else { 1.0 };
        for (k, (mean, var)) in stats.iter().enumerate() {
            let (rm, rv) = self.buffers.split_at_mut(2 * k + 1);
            let rm = &mut rm[2 * k].data;
            let rv = &mut rv[0].data;
            for c in 0..mean.len() {
                rm[c] = (1.0 - momentum) * rm[c] + momentum * mean[c];
                rv[c] = (1.0 - momentum) * rv[c] + momentum * var[c] * correction;
            }
        }
    }
}

struct BlockCache {
    input: Vec<f64>,
    r1: Vec<f64>,
}

struct Pass {
    batch: usize,
    input: Vec<f64>,
    stem_shape: ConvShape,
    block_shape: ConvShape,
    stem_out: Vec<f64>,
    blocks: Vec<BlockCache>,
    final_act: Vec<f64>,
    pooled: Vec<f64>,
    features: Vec<f64>,
    logits: Vec<f64>,
    bn: Vec<BnCache>,
}

impl Pass {
    /// Activation count of the stem output per sample (test helper).
    #[cfg(test)]
    fn plane_len(&self) -> usize {
        self.stem_out.len() / self.batch
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_image(side: usize, rng: &mut ChaCha8Rng) -> GrayImage {
        GrayImage::new(side, (0..side * side).map(|_| rng.random::<f64>()).collect(), (0.0, 1.0)).unwrap()
    }

    fn small_arch() -> FenArchitecture {
        FenArchitecture { blocks: 2, width: 8, stem_stride: 2, feature_dim: 8, classes: 4 }
    }

    #[test]
    fn zero_head_is_uniform() {
        let mut model = FenModel::new(FenArchitecture::default(), 3).unwrap();
        model.zero_head();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let img = random_image(12, &mut rng);
        let p = model.predict_proba(&img).unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let imgs: Vec<GrayImage> = (0..5).map(|_| random_image(10, &mut rng)).collect();
        let refs: Vec<&GrayImage> = imgs.iter().collect();
        let (loss, _) = model.loss_and_grad(&refs, &[1, 2, 3, 4, 1]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn size_agnostic_features() {
        let model = FenModel::new(FenArchitecture::default(), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for side in [2, 3, 35, 45] {
            let out = model.forward(&random_image(side, &mut rng)).unwrap();
            assert_eq!(out.features.len(), 64);
            assert_eq!(out.logits.len(), 4);
        }
    }

    #[test]
    fn identical_images_identical_features() {
        let model = FenModel::new(small_arch(), 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = random_image(9, &mut rng);
        assert_eq!(model.extract_features(&img).unwrap(), model.extract_features(&img.clone()).unwrap());
    }

    #[test]
    fn batch_errors() {
        let model = FenModel::new(small_arch(), 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (a, b) = (random_image(6, &mut rng), random_image(7, &mut rng));
        assert!(matches!(model.loss_and_grad(&[&a, &b], &[1, 2]), Err(Error::ShapeMismatch(_))));
        assert!(model.loss_and_grad(&[], &[]).is_err());
        assert!(model.loss_and_grad(&[&a], &[5]).is_err());
        assert!(model.loss_and_grad(&[&a], &[1, 2]).is_err());
    }

    #[test]
    fn duplicated_batch_has_same_loss() {
        let model = FenModel::new(small_arch(), 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let imgs: Vec<GrayImage> = (0..3).map(|_| random_image(6, &mut rng)).collect();
        let once: Vec<&GrayImage> = imgs.iter().collect();
        let twice: Vec<&GrayImage> = imgs.iter().chain(&imgs).collect();
        let (l1, _) = model.loss_and_grad(&once, &[1, 3, 4]).unwrap();
        let (l2, _) = model.loss_and_grad(&twice, &[1, 3, 4, 1, 3, 4]).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
    }

    #[test]
    fn zeroed_block_is_identity_on_nonnegative_input() {
        let mut model = FenModel::new(small_arch(), 2).unwrap();
        model.zero_residual_branch(0);
        model.zero_residual_branch(1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let imgs: Vec<GrayImage> = (0..2).map(|_| random_image(8, &mut rng)).collect();
        let refs: Vec<&GrayImage> = imgs.iter().collect();
        for mode in [Mode::Train, Mode::Inference] {
            let pass = model.run(&refs, mode).unwrap();
            assert!(pass.stem_out.iter().all(|&v| v >= 0.0));
            assert_eq!(pass.plane_len(), 8 * 16);
            for block in &pass.blocks {
                assert_eq!(block.input, pass.stem_out);
            }
            assert_eq!(pass.final_act, pass.stem_out);
        }
    }

    #[test]
    fn layouts_agree_with_tensors() {
        let model = FenModel::new(FenArchitecture::with_blocks(3), 0).unwrap();
        for (name, t) in model.parameters() {
            let (_, shape) = model.arch.parameter_layout().into_iter().find(|(n, _)| *n == name).unwrap();
            assert_eq!(t.shape, shape);
        }
        assert_eq!(model.buffers().len(), 2 * 7);
        assert!(FenModel::new(FenArchitecture { feature_dim: 4, ..Default::default() }, 0).is_err());
        assert!(FenModel::new(FenArchitecture { blocks: 0, ..Default::default() }, 0).is_err());
    }
}

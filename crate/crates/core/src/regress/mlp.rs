//! Single-hidden-layer tanh network trained by full-batch gradient descent.
//!
//! Targets are standardized internally; predictions are returned in the
//! original units.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights of `y = w2 . tanh(W1 z + b1) + b2`; `w1` is `[hidden][inputs]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    pub inputs: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpNetwork {
    pub fn init(inputs: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n1 = Normal::new(0.0, (1.0 / inputs as f64).sqrt()).expect("positive std");
        let n2 = Normal::new(0.0, (1.0 / hidden as f64).sqrt()).expect("positive std");
        Self {
            inputs,
            hidden,
            w1: (0..inputs * hidden).map(|_| n1.sample(&mut rng)).collect(),
            b1: vec![0.0; hidden],
            w2: (0..hidden).map(|_| n2.sample(&mut rng)).collect(),
            b2: 0.0,
        }
    }

    fn hidden_activations(&self, z: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|h| {
                let w = &self.w1[h * self.inputs..(h + 1) * self.inputs];
                (self.b1[h] + w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()).tanh()
            })
            .collect()
    }

    pub fn forward(&self, z: &[f64]) -> f64 {
        let a = self.hidden_activations(z);
        self.b2 + self.w2.iter().zip(&a).map(|(w, a)| w * a).sum::<f64>()
    }

    /// Half mean squared error and its gradient (returned as a network of
    /// the same shape).
    pub fn loss_and_grad(&self, z: &[Vec<f64>], y: &[f64]) -> (f64, MlpNetwork) {
        let n = y.len() as f64;
        let mut grad = MlpNetwork {
            inputs: self.inputs,
            hidden: self.hidden,
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.hidden],
            w2: vec![0.0; self.hidden],
            b2: 0.0,
        };
        let mut loss = 0.0;
        for (row, &target) in z.iter().zip(y) {
            let a = self.hidden_activations(row);
            let out = self.b2 + self.w2.iter().zip(&a).map(|(w, a)| w * a).sum::<f64>();
            let err = out - target;
            loss += 0.5 * err * err;
            let d = err / n;
            grad.b2 += d;
            for h in 0..self.hidden {
                grad.w2[h] += d * a[h];
                let dh = d * self.w2[h] * (1.0 - a[h] * a[h]);
                grad.b1[h] += dh;
                let gw = &mut grad.w1[h * self.inputs..(h + 1) * self.inputs];
                gw.iter_mut().zip(row).for_each(|(g, v)| *g += dh * v);
            }
        }
        (loss / n, grad)
    }

    fn step(&mut self, grad: &MlpNetwork, lr: f64) {
        self.w1.iter_mut().zip(&grad.w1).for_each(|(w, g)| *w -= lr * g);
        self.b1.iter_mut().zip(&grad.b1).for_each(|(w, g)| *w -= lr * g);
        self.w2.iter_mut().zip(&grad.w2).for_each(|(w, g)| *w -= lr * g);
        self.b2 -= lr * grad.b2;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub network: MlpNetwork,
    pub target_mean: f64,
    pub target_std: f64,
}

impl MlpModel {
    pub(super) fn fit(z: &[Vec<f64>], y: &[f64], hidden: usize, epochs: usize, lr: f64, seed: u64) -> Result<Self> {
        let n = y.len() as f64;
        let target_mean = y.iter().sum::<f64>() / n;
        let target_std = (y.iter().map(|v| (v - target_mean).powi(2)).sum::<f64>() / n).sqrt();
        if !(target_std > 0.0) {
            return Err(Error::DegenerateTarget);
        }
        let ys: Vec<f64> = y.iter().map(|v| (v - target_mean) / target_std).collect();
        let mut network = MlpNetwork::init(z[0].len(), hidden, seed);
        for _ in 0..epochs {
            let (_, grad) = network.loss_and_grad(z, &ys);
            network.step(&grad, lr);
        }
        Ok(Self { network, target_mean, target_std })
    }

    pub fn predict_row(&self, z: &[f64]) -> f64 {
        self.target_mean + self.target_std * self.network.forward(z)
    }
}

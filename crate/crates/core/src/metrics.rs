//! Forecast error metrics.
//!
//! `smape` divides by `|y| + |yhat|` without the conventional factor of two,
//! so it lies in `[0, 1]`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch(format!("{} targets vs {} predictions", y.len(), yhat.len())));
    }
    if y.is_empty() {
        return Err(Error::InsufficientData("metrics need at least one observation".into()));
    }
    Ok(())
}

fn mean_of(y: &[f64], yhat: &[f64], f: impl Fn(f64, f64) -> f64) -> Result<f64> {
    check(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| f(*a, *b)).sum::<f64>() / y.len() as f64)
}

pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    mean_of(y, yhat, |a, b| (a - b) * (a - b))
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    mean_of(y, yhat, |a, b| (a - b).abs())
}

pub fn mape(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat)?;
    if let Some(index) = y.iter().position(|v| *v == 0.0) {
        return Err(Error::ZeroDenominator { index });
    }
    mean_of(y, yhat, |a, b| ((a - b) / a).abs())
}

pub fn smape(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat)?;
    if let Some(index) = y.iter().zip(yhat).position(|(a, b)| a.abs() + b.abs() == 0.0) {
        return Err(Error::ZeroDenominator { index });
    }
    mean_of(y, yhat, |a, b| (a - b).abs() / (a.abs() + b.abs()))
}

/// Mean distance error over the interval bounds implied by center and range
/// predictions. With bound errors `el = (c - r) - (c^ - r^)` and
/// `eu = (c + r) - (c^ + r^)`, this is `sqrt(mean(sqrt((el^2 + eu^2) / 2)))`.
pub fn mde(center: &[f64], center_hat: &[f64], range: &[f64], range_hat: &[f64]) -> Result<f64> {
    Ok(mde_with(center, center_hat, range, range_hat, f64::sqrt)?.sqrt())
}

/// Single-root variant: `sqrt(mean((el^2 + eu^2) / 2))`.
pub fn mde_single_root(center: &[f64], center_hat: &[f64], range: &[f64], range_hat: &[f64]) -> Result<f64> {
    Ok(mde_with(center, center_hat, range, range_hat, |v| v)?.sqrt())
}

fn mde_with(
    center: &[f64],
    center_hat: &[f64],
    range: &[f64],
    range_hat: &[f64],
    f: impl Fn(f64) -> f64,
) -> Result<f64> {
    check(center, center_hat)?;
    check(range, range_hat)?;
    if center.len() != range.len() {
        return Err(Error::LengthMismatch(format!("{} center vs {} range steps", center.len(), range.len())));
    }
    let total: f64 = (0..center.len())
        .map(|i| {
            let el = (center[i] - range[i]) - (center_hat[i] - range_hat[i]);
            let eu = (range[i] + center[i]) - (range_hat[i] + center_hat[i]);
            f((el * el + eu * eu) / 2.0)
        })
        .sum();
    Ok(total / center.len() as f64)
}

/// MSE, MAE, MAPE and SMAPE of one prediction vector. Percentage metrics are
/// `None` when a denominator vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub mse: f64,
    pub mae: f64,
    pub mape: Option<f64>,
    pub smape: Option<f64>,
}

impl MetricSet {
    pub fn compute(y: &[f64], yhat: &[f64]) -> Result<Self> {
        Ok(Self { mse: mse(y, yhat)?, mae: mae(y, yhat)?, mape: mape(y, yhat).ok(), smape: smape(y, yhat).ok() })
    }
}

/// Metric sets keyed by an arbitrary label (e.g. `raw/ridge`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub rows: BTreeMap<String, MetricSet>,
}

impl MetricTable {
    pub fn insert(&mut self, key: impl Into<String>, set: MetricSet) {
        self.rows.insert(key.into(), set);
    }

    pub fn get(&self, key: &str) -> Option<&MetricSet> {
        self.rows.get(key)
    }
}

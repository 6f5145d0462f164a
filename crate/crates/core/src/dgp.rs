//! Synthetic interval-valued processes C1, C2 and C3.
//!
//! Initial conditions are never emitted: C1 and C3 start from `y_0` and emit
//! `y_1..y_T`; C2 starts from `y_0 = y_1 = 0` and emits `y_2..y_{T+1}`.
//! The C2 range and C3 center processes are not part of the original
//! designs; they reuse the C1 range and C1 center processes respectively.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::CenterRangeSeries;

pub const MIN_LENGTH: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DgpKind {
    C1,
    C2,
    C3,
}

impl std::fmt::Display for DgpKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DgpKind::C1 => "c1",
            DgpKind::C2 => "c2",
            DgpKind::C3 => "c3",
        })
    }
}

impl std::str::FromStr for DgpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "c1" => Ok(DgpKind::C1),
            "c2" => Ok(DgpKind::C2),
            "c3" => Ok(DgpKind::C3),
            other => Err(Error::InvalidArgument(format!("unknown dgp: {other}"))),
        }
    }
}

/// Logarithm used inside the C3 range recursion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Ten,
}

impl LogBase {
    fn apply(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Ten => x.log10(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSpec {
    pub kind: DgpKind,
    pub length: usize,
    pub seed: u64,
    #[serde(default = "default_noise_std")]
    pub noise_std: f64,
    /// Leading iterates discarded after generation.
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default)]
    pub log_base: LogBase,
}

fn default_noise_std() -> f64 {
    1.0
}

impl DgpSpec {
    pub fn new(kind: DgpKind, length: usize, seed: u64) -> Self {
        Self { kind, length, seed, noise_std: 1.0, burn_in: 0, log_base: LogBase::Natural }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < MIN_LENGTH {
            return Err(Error::InvalidArgument(format!(
                "dgp length must be at least {MIN_LENGTH}, got {}",
                self.length
            )));
        }
        if !(self.noise_std > 0.0) || !self.noise_std.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise std must be positive, got {}",
                self.noise_std
            )));
        }
        Ok(())
    }
}

/// Explicit random inputs for one simulated path, one entry per emitted step.
#[derive(Debug, Clone, PartialEq)]
pub struct Innovations {
    /// Gaussian shocks entering the center recursion.
    pub center: Vec<f64>,
    /// Gaussian shocks entering the C3 range recursion.
    pub range: Vec<f64>,
    /// Uniform(0, 1) draws mapped onto the uniform range marginal.
    pub uniform: Vec<f64>,
}

impl Innovations {
    pub fn zeros(n: usize) -> Self {
        Self { center: vec![0.0; n], range: vec![0.0; n], uniform: vec![0.5; n] }
    }

    pub fn draw<R: Rng + ?Sized>(n: usize, noise_std: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, noise_std).expect("validated noise std");
        let center = (0..n).map(|_| normal.sample(rng)).collect();
        let range = (0..n).map(|_| normal.sample(rng)).collect();
        let uniform = (0..n).map(|_| rng.random::<f64>()).collect();
        Self { center, range, uniform }
    }

    fn len(&self) -> usize {
        self.center.len()
    }
}

/// Generates a seeded path of `spec.length` points.
pub fn generate_dgp(spec: &DgpSpec) -> Result<CenterRangeSeries> {
    spec.validate()?;
    let n = spec.length + spec.burn_in;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let shocks = Innovations::draw(n, spec.noise_std, &mut rng);
    let full = simulate(spec.kind, &shocks, spec.log_base)?;
    let (center, range) = (full.center()[spec.burn_in..].to_vec(), full.range()[spec.burn_in..].to_vec());
    CenterRangeSeries::new(center, range)
}

/// Runs the recursion for `kind` with caller-supplied shocks.
pub fn simulate(kind: DgpKind, shocks: &Innovations, log_base: LogBase) -> Result<CenterRangeSeries> {
    let n = shocks.len();
    if shocks.range.len() != n || shocks.uniform.len() != n {
        return Err(Error::LengthMismatch("innovation streams differ in length".into()));
    }
    let (center, range) = match kind {
        DgpKind::C1 => (arma_center(&shocks.center), uniform_range(&shocks.uniform)),
        DgpKind::C2 => (threshold_center(&shocks.center), uniform_range(&shocks.uniform)),
        DgpKind::C3 => (arma_center(&shocks.center), log_ar_range(&shocks.range, log_base)?),
    };
    CenterRangeSeries::new(center, range)
}

/// `y_t = 0.4 y_{t-1} + e_t + 2 e_{t-1}`, `y_0 = e_0 = 0`.
fn arma_center(eps: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(eps.len());
    let (mut y_prev, mut e_prev) = (0.0, 0.0);
    for &e in eps {
        let y = 0.4 * y_prev + e + 2.0 * e_prev;
        out.push(y);
        y_prev = y;
        e_prev = e;
    }
    out
}

/// Two-regime threshold recursion keyed on the lag-2 value.
fn threshold_center(eps: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(eps.len());
    let (mut y0, mut y1) = (0.0, 0.0);
    for &e in eps {
        let y2 = if y0 < 5.0 {
            0.6 + 1.3 * y1 - 0.4 * y0 + e
        } else {
            1.2 + 1.6 * y1 - 1.1 * y0 + e
        };
        out.push(y2);
        y0 = y1;
        y1 = y2;
    }
    out
}

fn uniform_range(u: &[f64]) -> Vec<f64> {
    u.iter().map(|&u| 30.0 + 20.0 * u).collect()
}

/// `y_t = 0.2 y_{t-1} + 1.6 log(1000 y_{t-1}) + 30 + e_t`, `y_0 = 0.001`.
fn log_ar_range(eps: &[f64], log_base: LogBase) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(eps.len());
    let mut prev = 0.001;
    for (step, &e) in eps.iter().enumerate() {
        if !(prev > 0.0) {
            return Err(Error::LogDomain { step, value: prev });
        }
        let y = 0.2 * prev + 1.6 * log_base.apply(1000.0 * prev) + 30.0 + e;
        out.push(y);
        prev = y;
    }
    if let Some((step, &value)) = out.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::LogDomain { step: step + 1, value });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c1_zero_noise_is_zero() {
        let s = simulate(DgpKind::C1, &Innovations::zeros(50), LogBase::Natural).unwrap();
        assert!(s.center().iter().all(|&c| c == 0.0));
        assert!(s.range().iter().all(|&r| r == 40.0));
    }

    #[test]
    fn c1_forced_shocks() {
        let mut shocks = Innovations::zeros(2);
        shocks.center = vec![1.0, 1.0];
        let s = simulate(DgpKind::C1, &shocks, LogBase::Natural).unwrap();
        assert_eq!(s.center()[0], 1.0);
        assert!((s.center()[1] - 3.4).abs() < 1e-12);
    }

    #[test]
    fn c2_zero_noise_trajectory() {
        let s = simulate(DgpKind::C2, &Innovations::zeros(4), LogBase::Natural).unwrap();
        let expected = [0.6, 1.38, 2.154, 0.6 + 1.3 * 2.154 - 0.4 * 1.38];
        for (a, b) in s.center().iter().zip(expected) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn c3_zero_noise_range() {
        let s = simulate(DgpKind::C3, &Innovations::zeros(2), LogBase::Natural).unwrap();
        assert!((s.range()[0] - 30.0002).abs() < 1e-12);
        assert!((s.range()[1] - 52.4944).abs() < 1e-4);
    }

    #[test]
    fn c3_log_domain() {
        let mut shocks = Innovations::zeros(3);
        shocks.range = vec![-100.0, 0.0, 0.0];
        assert!(matches!(
            simulate(DgpKind::C3, &shocks, LogBase::Natural),
            Err(Error::LogDomain { .. })
        ));
    }

    #[test]
    fn seeded_determinism_and_length() {
        for kind in [DgpKind::C1, DgpKind::C2, DgpKind::C3] {
            let spec = DgpSpec::new(kind, 1500, 7);
            let a = generate_dgp(&spec).unwrap();
            let b = generate_dgp(&spec).unwrap();
            assert_eq!(a.len(), 1500);
            assert!(a.center().iter().zip(b.center()).all(|(x, y)| x.to_bits() == y.to_bits()));
            assert!(a.range().iter().zip(b.range()).all(|(x, y)| x.to_bits() == y.to_bits()));
            assert!(a.center().iter().all(|c| c.is_finite()));
        }
    }

    #[test]
    fn burn_in_drops_prefix() {
        let mut spec = DgpSpec::new(DgpKind::C1, 100, 3);
        let plain = generate_dgp(&spec).unwrap();
        spec.burn_in = 10;
        let burned = generate_dgp(&spec).unwrap();
        assert_eq!(burned.len(), 100);
        assert_ne!(plain.center()[0], burned.center()[0]);
    }

    #[test]
    fn rejects_short_and_bad_noise() {
        assert!(generate_dgp(&DgpSpec::new(DgpKind::C1, 9, 0)).is_err());
        let mut spec = DgpSpec::new(DgpKind::C1, 100, 0);
        spec.noise_std = 0.0;
        assert!(generate_dgp(&spec).is_err());
        assert!("c9".parse::<DgpKind>().is_err());
    }
}

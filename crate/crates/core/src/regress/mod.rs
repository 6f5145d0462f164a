//! Interchangeable regressors fitted on standardized feature rows.

mod knn;
pub mod mlp;
mod ridge;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use knn::KnnModel;
pub use mlp::{MlpModel, MlpNetwork};
pub use ridge::RidgeModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegressorSpec {
    Ridge {
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    Knn {
        #[serde(default = "default_k")]
        k: usize,
    },
    Mlp {
        #[serde(default = "default_hidden")]
        hidden: usize,
        #[serde(default = "default_mlp_epochs")]
        epochs: usize,
        #[serde(default = "default_mlp_lr")]
        learning_rate: f64,
        #[serde(default)]
        seed: u64,
    },
}

fn default_lambda() -> f64 {
    1.0
}
fn default_k() -> usize {
    5
}
fn default_hidden() -> usize {
    32
}
fn default_mlp_epochs() -> usize {
    500
}
fn default_mlp_lr() -> f64 {
    0.1
}

impl RegressorSpec {
    pub fn ridge(lambda: f64) -> Self {
        RegressorSpec::Ridge { lambda }
    }

    pub fn knn(k: usize) -> Self {
        RegressorSpec::Knn { k }
    }

    pub fn mlp(seed: u64) -> Self {
        RegressorSpec::Mlp {
            hidden: default_hidden(),
            epochs: default_mlp_epochs(),
            learning_rate: default_mlp_lr(),
            seed,
        }
    }

    /// The default roster: ridge, 5-NN and a small MLP.
    pub fn roster() -> Vec<Self> {
        vec![Self::ridge(default_lambda()), Self::knn(default_k()), Self::mlp(0)]
    }

    /// Short label used in reports, e.g. `ridge`, `knn`, `mlp`.
    pub fn name(&self) -> &'static str {
        match self {
            RegressorSpec::Ridge { .. } => "ridge",
            RegressorSpec::Knn { .. } => "knn",
            RegressorSpec::Mlp { .. } => "mlp",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RegressorSpec::Ridge { lambda } if !(lambda >= 0.0) || !lambda.is_finite() => {
                Err(Error::InvalidArgument(format!("ridge lambda must be >= 0, got {lambda}")))
            }
            RegressorSpec::Knn { k } if k < 1 => Err(Error::InvalidArgument("knn k must be >= 1".into())),
            RegressorSpec::Mlp { hidden, epochs, learning_rate, .. }
                if hidden < 1 || epochs < 1 || !(learning_rate > 0.0) =>
            {
                Err(Error::InvalidArgument("mlp needs hidden >= 1, epochs >= 1 and a positive learning rate".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Per-column mean and (population) standard deviation of the training rows.
/// Constant columns get unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let p = x.first().map_or(0, Vec::len);
        let n = x.len() as f64;
        let mut mean = vec![0.0; p];
        for row in x {
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for row in x {
            for j in 0..p {
                var[j] += (row[j] - mean[j]).powi(2);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).map(|s| if s > 0.0 { s } else { 1.0 }).collect();
        Self { mean, std }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedModel {
    Ridge(RidgeModel),
    Knn(KnnModel),
    Mlp(MlpModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedRegressor {
    pub spec: RegressorSpec,
    pub standardizer: Standardizer,
    pub model: FittedModel,
}

fn check_shape(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 rows, got {}", x.len())));
    }
    let p = x[0].len();
    if p == 0 {
        return Err(Error::InvalidArgument("feature rows are empty".into()));
    }
    if let Some(bad) = x.iter().find(|r| r.len() != p) {
        return Err(Error::DimensionMismatch { expected: p, found: bad.len() });
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in training data".into()));
    }
    Ok(p)
}

/// Fits `spec` on rows `x` and targets `y`.
pub fn fit(spec: &RegressorSpec, x: &[Vec<f64>], y: &[f64]) -> Result<FittedRegressor> {
    spec.validate()?;
    check_shape(x, y)?;
    let standardizer = Standardizer::fit(x);
    let z = standardizer.transform(x);
    let model = match *spec {
        RegressorSpec::Ridge { lambda } => FittedModel::Ridge(RidgeModel::fit(x, &z, y, lambda)?),
        RegressorSpec::Knn { k } => FittedModel::Knn(KnnModel::fit(z, y.to_vec(), k)?),
        RegressorSpec::Mlp { hidden, epochs, learning_rate, seed } => {
            FittedModel::Mlp(MlpModel::fit(&z, y, hidden, epochs, learning_rate, seed)?)
        }
    };
    Ok(FittedRegressor { spec: spec.clone(), standardizer, model })
}

impl FittedRegressor {
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        let p = self.standardizer.width();
        if let Some(bad) = x.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch { expected: p, found: bad.len() });
        }
        Ok(x.iter()
            .map(|row| {
                let z = self.standardizer.transform_row(row);
                match &self.model {
                    FittedModel::Ridge(m) => m.predict_row(&z),
                    FittedModel::Knn(m) => m.predict_row(&z),
                    FittedModel::Mlp(m) => m.predict_row(&z),
                }
            })
            .collect())
    }

    /// Training-row indices of the nearest neighbours of `row` (k-NN only).
    pub fn neighbors(&self, row: &[f64]) -> Option<Vec<usize>> {
        match &self.model {
            FittedModel::Knn(m) => Some(m.neighbors(&self.standardizer.transform_row(row))),
            _ => None,
        }
    }
}

/// Free-function form of [`FittedRegressor::predict`].
pub fn predict(model: &FittedRegressor, x: &[Vec<f64>]) -> Result<Vec<f64>> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(n: usize, p: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let y = x.iter().map(|r| r.iter().sum::<f64>().sin() + rng.random_range(-0.1..0.1)).collect();
        (x, y)
    }

    #[test]
    fn ridge_interpolates_identity() {
        let x = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let m = fit(&RegressorSpec::ridge(0.0), &x, &[1.0, 2.0]).unwrap();
        let pred = m.predict(&x).unwrap();
        assert!((pred[0] - 1.0).abs() < 1e-12 && (pred[1] - 2.0).abs() < 1e-12, "{pred:?}");
    }

    #[test]
    fn ridge_singular_without_penalty() {
        let x = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        assert!(matches!(fit(&RegressorSpec::ridge(0.0), &x, &[1.0, 2.0, 3.0]), Err(Error::SingularSystem)));
        assert!(fit(&RegressorSpec::ridge(0.1), &x, &[1.0, 2.0, 3.0]).is_ok());
    }

    #[test]
    fn ridge_heavy_penalty_predicts_mean() {
        let (x, y) = random_problem(30, 3, 1);
        let m = fit(&RegressorSpec::ridge(1e9), &x, &y).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        for p in m.predict(&x).unwrap() {
            assert!((p - mean).abs() < 1e-6);
        }
    }

    #[test]
    fn ridge_recovers_line() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![f64::from(i) * 0.5]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        let m = fit(&RegressorSpec::ridge(1e-8), &x, &y).unwrap();
        for (p, t) in m.predict(&x).unwrap().iter().zip(&y) {
            assert!((p - t).abs() < 1e-6);
        }
    }

    #[test]
    fn knn_one_memorizes() {
        let (x, y) = random_problem(25, 4, 2);
        let m = fit(&RegressorSpec::knn(1), &x, &y).unwrap();
        assert_eq!(m.predict(&x).unwrap(), y);
    }

    #[test]
    fn empty_input_and_width_checks() {
        let (x, y) = random_problem(10, 3, 3);
        for spec in RegressorSpec::roster() {
            let m = fit(&spec, &x, &y).unwrap();
            assert!(m.predict(&[]).unwrap().is_empty());
            assert!(matches!(m.predict(&[vec![1.0]]), Err(Error::DimensionMismatch { .. })));
        }
        assert!(matches!(fit(&RegressorSpec::knn(1), &x, &y[..5]), Err(Error::DimensionMismatch { .. })));
        assert!(fit(&RegressorSpec::knn(1), &x[..1], &y[..1]).is_err());
        assert!(fit(&RegressorSpec::knn(0), &x, &y).is_err());
        assert!(fit(&RegressorSpec::ridge(-1.0), &x, &y).is_err());
    }

    #[test]
    fn mlp_rejects_constant_target() {
        let (x, _) = random_problem(10, 2, 4);
        assert!(matches!(fit(&RegressorSpec::mlp(0), &x, &[3.0; 10]), Err(Error::DegenerateTarget)));
    }

    #[test]
    fn mlp_fits_smooth_function() {
        let (x, y) = random_problem(80, 2, 5);
        let m = fit(&RegressorSpec::mlp(1), &x, &y).unwrap();
        let pred = m.predict(&x).unwrap();
        let mse = pred.iter().zip(&y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / y.len() as f64;
        let var = {
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            y.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / y.len() as f64
        };
        assert!(mse < 0.5 * var, "mse {mse} var {var}");
    }

    #[test]
    fn knn_neighbors_invariant_to_affine_rescaling() {
        let (x, y) = random_problem(40, 3, 6);
        let scale = [3.0, -0.01, 250.0];
        let shift = [10.0, -4.0, 1e3];
        let moved: Vec<Vec<f64>> =
            x.iter().map(|r| r.iter().enumerate().map(|(j, v)| scale[j] * v + shift[j]).collect()).collect();
        let a = fit(&RegressorSpec::knn(5), &x, &y).unwrap();
        let b = fit(&RegressorSpec::knn(5), &moved, &y).unwrap();
        let (queries, _) = random_problem(10, 3, 7);
        for q in &queries {
            let qm: Vec<f64> = q.iter().enumerate().map(|(j, v)| scale[j] * v + shift[j]).collect();
            let mut na = a.neighbors(q).unwrap();
            let mut nb = b.neighbors(&qm).unwrap();
            na.sort_unstable();
            nb.sort_unstable();
            assert_eq!(na, nb);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn row_permutation_invariance(seed in 0u64..1000, rot in 1usize..29) {
            let (x, y) = random_problem(30, 3, seed);
            let xp: Vec<Vec<f64>> = x.iter().cycle().skip(rot).take(30).cloned().collect();
            let yp: Vec<f64> = y.iter().cycle().skip(rot).take(30).copied().collect();
            let (queries, _) = random_problem(8, 3, seed + 1);
            let specs = [
                RegressorSpec::ridge(0.5),
                RegressorSpec::knn(3),
                RegressorSpec::Mlp { hidden: 8, epochs: 50, learning_rate: 0.1, seed: 3 },
            ];
            for spec in &specs {
                let a = fit(spec, &x, &y).unwrap().predict(&queries).unwrap();
                let b = fit(spec, &xp, &yp).unwrap().predict(&queries).unwrap();
                for (p, q) in a.iter().zip(&b) {
                    prop_assert!((p - q).abs() < 1e-9, "{}: {} vs {}", spec.name(), p, q);
                }
            }
        }
    }
}

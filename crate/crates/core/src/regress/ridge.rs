use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative singular-value cutoff for rank decisions.
const RANK_TOL: f64 = 1e-12;

/// Linear model on standardized features with an unpenalized intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub lambda: f64,
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let p = rows[0].len();
    DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j])
}

impl RidgeModel {
    /// Solves `(Z'Z + lambda I) beta = Z'(y - mean y)`.
    ///
    /// With `lambda = 0` the minimum-norm least-squares solution is used;
    /// the system is rejected only when the raw `X'X` is singular.
    pub(super) fn fit(raw: &[Vec<f64>], z: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<Self> {
        let n = y.len() as f64;
        let intercept = y.iter().sum::<f64>() / n;
        let zm = to_matrix(z);
        let yc = DVector::from_iterator(y.len(), y.iter().map(|v| v - intercept));
        let p = zm.ncols();
        let beta = if lambda > 0.0 {
            let a = zm.transpose() * &zm + DMatrix::identity(p, p) * lambda;
            let b = zm.transpose() * &yc;
            a.cholesky().ok_or(Error::SingularSystem)?.solve(&b)
        } else {
            let raw_sv = to_matrix(raw).singular_values();
            let top = raw_sv.max();
            if raw.len() < p || raw_sv.iter().any(|s| *s <= top * RANK_TOL) {
                return Err(Error::SingularSystem);
            }
            let svd = zm.svd(true, true);
            let cutoff = svd.singular_values.max() * RANK_TOL;
            svd.solve(&yc, cutoff).map_err(|_| Error::SingularSystem)?
        };
        Ok(Self { intercept, coefficients: beta.iter().copied().collect(), lambda })
    }

    pub fn predict_row(&self, z: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(z).map(|(b, v)| b * v).sum::<f64>()
    }

    /// `max |(Z'Z + lambda I) beta - Z'(y - intercept)|`.
    pub fn normal_equation_residual(&self, z: &[Vec<f64>], y: &[f64]) -> f64 {
        let zm = to_matrix(z);
        let beta = DVector::from_column_slice(&self.coefficients);
        let yc = DVector::from_iterator(y.len(), y.iter().map(|v| v - self.intercept));
        let lhs = zm.transpose() * (&zm * &beta) + &beta * self.lambda;
        (lhs - zm.transpose() * yc).amax()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::Standardizer;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normal_equations_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for lambda in [0.0, 1e-3, 1.0, 100.0] {
            let x: Vec<Vec<f64>> = (0..50).map(|_| (0..6).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
            let y: Vec<f64> = x.iter().map(|r| r[0] - 2.0 * r[3] + rng.random_range(-1.0..1.0)).collect();
            let z = Standardizer::fit(&x).transform(&x);
            let m = RidgeModel::fit(&x, &z, &y, lambda).unwrap();
            assert!(m.normal_equation_residual(&z, &y) < 1e-8);
        }
    }
}

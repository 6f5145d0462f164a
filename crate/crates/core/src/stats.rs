//! Sample autocorrelation, partial autocorrelation and lag-order selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_input(x: &[f64], max_lag: usize) -> Result<()> {
    if max_lag == 0 {
        return Err(Error::InvalidArgument("max_lag must be positive".into()));
    }
    if x.len() <= max_lag {
        return Err(Error::OrderTooLarge { order: max_lag, len: x.len() });
    }
    Ok(())
}

/// Biased (divide-by-T) sample autocorrelations `r(0..=max_lag)`, `r(0) = 1`.
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    check_input(x, max_lag)?;
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0 = dev.iter().map(|d| d * d).sum::<f64>() / n;
    if !(c0 > 0.0) {
        return Err(Error::DegenerateSeries);
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    for k in 1..=max_lag {
        let ck = dev[k..].iter().zip(&dev).map(|(a, b)| a * b).sum::<f64>() / n;
        out.push(ck / c0);
    }
    Ok(out)
}

/// Partial autocorrelations via the Durbin-Levinson recursion.
///
/// Index 0 holds 1 so that indices line up with [`acf`].
pub fn pacf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let r = acf(x, max_lag)?;
    Ok(durbin_levinson(&r))
}

/// Partial autocorrelations from an autocorrelation sequence starting at lag 0.
pub fn durbin_levinson(r: &[f64]) -> Vec<f64> {
    let max_lag = r.len().saturating_sub(1);
    let mut out = vec![1.0; max_lag + 1];
    if max_lag == 0 {
        return out;
    }
    let mut phi = vec![r[1]];
    let mut v = 1.0 - r[1] * r[1];
    out[1] = r[1];
    for k in 2..=max_lag {
        let num = r[k] - (1..k).map(|j| phi[j - 1] * r[k - j]).sum::<f64>();
        let kk = if v > 0.0 { num / v } else { 0.0 };
        let mut next = vec![0.0; k];
        for j in 1..k {
            next[j - 1] = phi[j - 1] - kk * phi[k - j - 1];
        }
        next[k - 1] = kk;
        phi = next;
        v *= 1.0 - kk * kk;
        out[k] = kk;
    }
    out
}

/// Half-width of the approximate 95% white-noise band for a series of length `n`.
pub fn confidence_band(n: usize) -> f64 {
    1.96 / (n as f64).sqrt()
}

/// Largest lag `k <= max_lag` with `|pacf(k)|` outside the 95% band, or 1 if none.
pub fn select_order(x: &[f64], max_lag: usize) -> Result<usize> {
    let p = pacf(x, max_lag)?;
    let band = confidence_band(x.len());
    Ok((1..=max_lag).rev().find(|&k| p[k].abs() > band).unwrap_or(1))
}

/// Datasets with lag orders fixed by visual ACF/PACF inspection in the
/// reference study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceDataset {
    Sp500,
    C1,
    C2,
    C3,
}

impl ReferenceDataset {
    /// `(center order, range order)`.
    pub fn pinned_orders(self) -> (usize, usize) {
        match self {
            ReferenceDataset::Sp500 => (35, 35),
            ReferenceDataset::C1 => (5, 3),
            ReferenceDataset::C2 => (25, 5),
            ReferenceDataset::C3 => (5, 5),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn white_noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let e = white_noise(n, seed);
        let mut y = vec![0.0; n];
        for t in 1..n {
            y[t] = phi * y[t - 1] + e[t];
        }
        y
    }

    /// Brute-force OLS partial autocorrelation: coefficient on lag k of an AR(k) fit.
    fn pacf_by_regression(r: &[f64], k: usize) -> f64 {
        // Solve the Yule-Walker system R phi = r[1..=k] by Gaussian elimination.
        let mut a: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                let mut row: Vec<f64> = (0..k).map(|j| r[i.abs_diff(j)]).collect();
                row.push(r[i + 1]);
                row
            })
            .collect();
        for c in 0..k {
            let p = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, p);
            for i in 0..k {
                if i != c {
                    let f = a[i][c] / a[c][c];
                    for j in c..=k {
                        a[i][j] -= f * a[c][j];
                    }
                }
            }
        }
        a[k - 1][k] / a[k - 1][k - 1]
    }

    #[test]
    fn lag_zero_is_one() {
        let r = acf(&[1.0, 3.0, 2.0, 5.0], 2).unwrap();
        assert_eq!(r[0], 1.0);
    }

    #[test]
    fn alternating_series() {
        let x = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let r = acf(&x, 1).unwrap();
        // Biased estimator: -(T-1)/T.
        assert!((r[1] + 5.0 / 6.0).abs() < 1e-12);
        assert!((r[1] + 1.0).abs() <= 1.0 / 6.0 + 1e-12);
    }

    #[test]
    fn ar1_acf_and_pacf() {
        let y = ar1(0.5, 10_000, 11);
        let r = acf(&y, 5).unwrap();
        for k in 1..=5 {
            assert!((r[k] - 0.5f64.powi(k as i32)).abs() < 0.05, "acf({k}) = {}", r[k]);
        }
        let p = pacf(&y, 5).unwrap();
        assert!((p[1] - 0.5).abs() < 0.05);
        for k in 2..=5 {
            assert!(p[k].abs() < 0.05, "pacf({k}) = {}", p[k]);
        }
    }

    #[test]
    fn pacf_first_equals_acf_first() {
        let y = ar1(0.3, 500, 2);
        assert_eq!(pacf(&y, 4).unwrap()[1], acf(&y, 4).unwrap()[1]);
    }

    #[test]
    fn pacf_matches_yule_walker_solve() {
        let y = ar1(0.7, 800, 5);
        let r = acf(&y, 6).unwrap();
        let p = durbin_levinson(&r);
        for k in 1..=6 {
            assert!((p[k] - pacf_by_regression(&r, k)).abs() < 1e-10);
        }
    }

    #[test]
    fn white_noise_pacf_inside_band() {
        let n = 10_000;
        let p = pacf(&white_noise(n, 99), 20).unwrap();
        let band = 2.0 / (n as f64).sqrt() * 1.5;
        assert!(p[1..].iter().all(|v| v.abs() < band));
    }

    /// Largest lag whose Yule-Walker partial autocorrelation leaves the
    /// 1.96/sqrt(T) band, computed without Durbin-Levinson.
    fn oracle_exceedance(x: &[f64], max_lag: usize) -> Option<usize> {
        let r = acf(x, max_lag).unwrap();
        let band = 1.96 / (x.len() as f64).sqrt();
        (1..=max_lag).rev().find(|&k| pacf_by_regression(&r, k).abs() > band)
    }

    #[test]
    fn order_selection_white_noise() {
        let wn = white_noise(2000, 0);
        assert_eq!(oracle_exceedance(&wn, 10), None);
        assert_eq!(select_order(&wn, 10).unwrap(), 1);
    }

    #[test]
    fn order_selection_ar1() {
        let ar = ar1(0.8, 5000, 0);
        assert_eq!(oracle_exceedance(&ar, 10), Some(1));
        assert_eq!(select_order(&ar, 10).unwrap(), 1);
    }

    #[test]
    fn pinned_orders() {
        let all: Vec<_> = [
            ReferenceDataset::Sp500,
            ReferenceDataset::C1,
            ReferenceDataset::C2,
            ReferenceDataset::C3,
        ]
        .iter()
        .flat_map(|d| {
            let (c, r) = d.pinned_orders();
            [c, r]
        })
        .collect();
        assert_eq!(all, vec![35, 35, 5, 3, 25, 5, 5, 5]);
    }

    #[test]
    fn degenerate_and_short() {
        assert!(matches!(acf(&[2.0; 10], 3), Err(Error::DegenerateSeries)));
        assert!(matches!(select_order(&[2.0; 10], 3), Err(Error::DegenerateSeries)));
        assert!(acf(&[1.0, 2.0], 2).is_err());
    }
}

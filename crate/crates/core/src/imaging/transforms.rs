use crate::error::{Error, Result};

use super::GrayImage;

fn check_window(w: &[f64]) -> Result<()> {
    if w.len() < 2 {
        return Err(Error::ShapeMismatch(format!("window of length {} cannot be imaged", w.len())));
    }
    Ok(())
}

fn min_max(w: &[f64]) -> (f64, f64) {
    w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Affine map of `w` onto `[-1, 1]`; a constant vector maps to zeros.
pub fn rescale_minmax(w: &[f64]) -> Vec<f64> {
    if w.is_empty() {
        return Vec::new();
    }
    let (lo, hi) = min_max(w);
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![0.0; w.len()];
    }
    w.iter().map(|v| (2.0 * (v - lo) / span - 1.0).clamp(-1.0, 1.0)).collect()
}

fn square(n: usize, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(f(i, j));
        }
    }
    out
}

/// Unthresholded recurrence plot `R_ij = |w_i - w_j|` (embedding dimension 1).
pub fn rp(w: &[f64]) -> Result<GrayImage> {
    check_window(w)?;
    let (lo, hi) = min_max(w);
    GrayImage::new(w.len(), square(w.len(), |i, j| (w[i] - w[j]).abs()), (0.0, hi - lo))
}

/// Binary recurrence plot `R_ij = 1` if `|w_i - w_j| <= eps`.
pub fn rp_thresholded(w: &[f64], eps: f64) -> Result<GrayImage> {
    check_window(w)?;
    let pixels = square(w.len(), |i, j| if (w[i] - w[j]).abs() <= eps { 1.0 } else { 0.0 });
    GrayImage::new(w.len(), pixels, (0.0, 1.0))
}

fn angles(w: &[f64]) -> Vec<f64> {
    rescale_minmax(w).into_iter().map(f64::acos).collect()
}

/// Gramian angular summation field `cos(phi_i + phi_j)`.
pub fn gasf(w: &[f64]) -> Result<GrayImage> {
    check_window(w)?;
    let phi = angles(w);
    GrayImage::new(w.len(), square(w.len(), |i, j| (phi[i] + phi[j]).cos()), (-1.0, 1.0))
}

/// Gramian angular difference field `sin(phi_i - phi_j)`.
pub fn gadf(w: &[f64]) -> Result<GrayImage> {
    check_window(w)?;
    let phi = angles(w);
    GrayImage::new(w.len(), square(w.len(), |i, j| (phi[i] - phi[j]).sin()), (-1.0, 1.0))
}

/// Equal-count bin index of every value.
///
/// Edges are the `k/bins` quantiles (linear interpolation between order
/// statistics); a value equal to an edge falls in the lower bin.
pub fn quantile_bins(w: &[f64], bins: usize) -> Vec<usize> {
    let mut sorted = w.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let edges: Vec<f64> = (1..bins)
        .map(|k| {
            let pos = k as f64 / bins as f64 * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        })
        .collect();
    w.iter().map(|v| edges.iter().filter(|&&e| e < *v).count()).collect()
}

/// Markov transition field with `bins` quantile bins.
///
/// Empty rows of the transition matrix become uniform `1/bins`.
pub fn mtf(w: &[f64], bins: usize) -> Result<GrayImage> {
    check_window(w)?;
    if bins < 2 || bins > w.len() {
        return Err(Error::BinCountTooLarge { bins, len: w.len() });
    }
    let q = quantile_bins(w, bins);
    let transitions = transition_matrix(&q, bins);
    GrayImage::new(w.len(), square(w.len(), |i, j| transitions[q[i] * bins + q[j]]), (0.0, 1.0))
}

/// Row-stochastic matrix of adjacent transitions between bins, row-major.
pub(crate) fn transition_matrix(q: &[usize], bins: usize) -> Vec<f64> {
    let mut counts = vec![0.0; bins * bins];
    for pair in q.windows(2) {
        counts[pair[0] * bins + pair[1]] += 1.0;
    }
    for row in counts.chunks_mut(bins) {
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|c| *c /= total);
        } else {
            row.iter_mut().for_each(|c| *c = 1.0 / bins as f64);
        }
    }
    counts
}

/// Bilinear resampling to `side x side` with pixel-center alignment.
pub fn resize_bilinear(img: &GrayImage, side: usize) -> Result<GrayImage> {
    let n = img.side();
    let scale = n as f64 / side as f64;
    let coord = |i: usize| {
        let x = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (n - 1) as f64);
        let lo = (x.floor() as usize).min(n - 1);
        (lo, (lo + 1).min(n - 1), x - lo as f64)
    };
    let mut out = Vec::with_capacity(side * side);
    for r in 0..side {
        let (r0, r1, fr) = coord(r);
        for c in 0..side {
            let (c0, c1, fc) = coord(c);
            let top = img.get(r0, c0) * (1.0 - fc) + img.get(r0, c1) * fc;
            let bottom = img.get(r1, c0) * (1.0 - fc) + img.get(r1, c1) * fc;
            out.push(top * (1.0 - fr) + bottom * fr);
        }
    }
    GrayImage::new(side, out, img.value_range())
}

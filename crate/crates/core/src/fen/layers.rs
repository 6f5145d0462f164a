//! Forward passes and hand-derived adjoints for the network's layers.
//!
//! Activations use `[batch][channel][row][col]` layout. Convolutions are
//! 3x3 with zero padding 1. Per-sample work runs in parallel; every
//! reduction across samples is summed sequentially in sample order.

use rayon::prelude::*;

pub const KERNEL: usize = 3;
pub const BN_EPS: f64 = 1e-5;

/// Spatial geometry of one convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvShape {
    pub in_channels: usize,
    pub out_channels: usize,
    pub height: usize,
    pub width: usize,
    pub stride: usize,
}

impl ConvShape {
    pub fn out_height(&self) -> usize {
        (self.height - 1) / self.stride + 1
    }

    pub fn out_width(&self) -> usize {
        (self.width - 1) / self.stride + 1
    }

    fn in_len(&self) -> usize {
        self.in_channels * self.height * self.width
    }

    fn out_len(&self) -> usize {
        self.out_channels * self.out_height() * self.out_width()
    }

    /// Output columns `x` whose tap `kx` lands inside the input row.
    fn col_range(&self, kx: usize) -> std::ops::Range<usize> {
        tap_range(kx, self.width, self.stride, self.out_width())
    }

    fn row_range(&self, ky: usize) -> std::ops::Range<usize> {
        tap_range(ky, self.height, self.stride, self.out_height())
    }
}

/// Outputs `x < out` with `0 <= x * stride + tap - 1 < len`.
fn tap_range(tap: usize, len: usize, stride: usize, out: usize) -> std::ops::Range<usize> {
    let lo = usize::from(tap == 0);
    if tap > len {
        return lo..lo;
    }
    let hi = ((len - tap) / stride + 1).min(out);
    lo..hi.max(lo)
}

fn conv_sample(input: &[f64], weight: &[f64], s: &ConvShape, out: &mut [f64]) {
    let (ho, wo) = (s.out_height(), s.out_width());
    let plane_in = s.height * s.width;
    out.fill(0.0);
    for o in 0..s.out_channels {
        let out_plane = &mut out[o * ho * wo..(o + 1) * ho * wo];
        for c in 0..s.in_channels {
            let in_plane = &input[c * plane_in..(c + 1) * plane_in];
            let kernel = &weight[(o * s.in_channels + c) * KERNEL * KERNEL..][..KERNEL * KERNEL];
            for ky in 0..KERNEL {
                for y in s.row_range(ky) {
                    let iy = y * s.stride + ky - 1;
                    let in_row = &in_plane[iy * s.width..(iy + 1) * s.width];
                    let out_row = &mut out_plane[y * wo..(y + 1) * wo];
                    for kx in 0..KERNEL {
                        let wv = kernel[ky * KERNEL + kx];
                        let cols = s.col_range(kx);
                        if s.stride == 1 {
                            let src = &in_row[cols.start + kx - 1..cols.end + kx - 1];
                            for (o, i) in out_row[cols].iter_mut().zip(src) {
                                *o += wv * i;
                            }
                        } else {
                            for x in cols {
                                out_row[x] += wv * in_row[x * s.stride + kx - 1];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Batched convolution without bias.
pub fn conv_forward(input: &[f64], batch: usize, weight: &[f64], s: &ConvShape) -> Vec<f64> {
    debug_assert_eq!(input.len(), batch * s.in_len());
    let mut out = vec![0.0; batch * s.out_len()];
    out.par_chunks_mut(s.out_len())
        .zip(input.par_chunks(s.in_len()))
        .for_each(|(o, i)| conv_sample(i, weight, s, o));
    out
}

/// Returns `(d input, d weight)`.
pub fn conv_backward(
    input: &[f64],
    grad_out: &[f64],
    batch: usize,
    weight: &[f64],
    s: &ConvShape,
) -> (Vec<f64>, Vec<f64>) {
    let (ho, wo) = (s.out_height(), s.out_width());
    let plane_in = s.height * s.width;
    let wlen = weight.len();
    let per_sample: Vec<(Vec<f64>, Vec<f64>)> = input
        .par_chunks(s.in_len())
        .zip(grad_out.par_chunks(s.out_len()))
        .map(|(inp, gout)| {
            let mut gin = vec![0.0; s.in_len()];
            let mut gw = vec![0.0; wlen];
            for o in 0..s.out_channels {
                let gplane = &gout[o * ho * wo..(o + 1) * ho * wo];
                for c in 0..s.in_channels {
                    let in_plane = &inp[c * plane_in..(c + 1) * plane_in];
                    let gin_plane = &mut gin[c * plane_in..(c + 1) * plane_in];
                    let kidx = (o * s.in_channels + c) * KERNEL * KERNEL;
                    for ky in 0..KERNEL {
                        for y in s.row_range(ky) {
                            let iy = y * s.stride + ky - 1;
                            let grow = &gplane[y * wo..(y + 1) * wo];
                            for kx in 0..KERNEL {
                                let wv = weight[kidx + ky * KERNEL + kx];
                                let mut acc = 0.0;
                                for x in s.col_range(kx) {
                                    let ix = iy * s.width + x * s.stride + kx - 1;
                                    acc += grow[x] * in_plane[ix];
                                    gin_plane[ix] += wv * grow[x];
                                }
                                gw[kidx + ky * KERNEL + kx] += acc;
                            }
                        }
                    }
                }
            }
            (gin, gw)
        })
        .collect();
    let mut grad_in = Vec::with_capacity(batch * s.in_len());
    let mut grad_w = vec![0.0; wlen];
    for (gin, gw) in per_sample {
        grad_in.extend_from_slice(&gin);
        grad_w.iter_mut().zip(&gw).for_each(|(a, b)| *a += b);
    }
    (grad_in, grad_w)
}

/// Saved state of a batch-statistics normalization.
#[derive(Debug, Clone)]
pub struct BnCache {
    pub xhat: Vec<f64>,
    pub inv_std: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Normalizes each channel with batch statistics over `(batch, row, col)`.
/// `var` in the cache is the biased batch variance.
pub fn bn_forward_train(
    x: &[f64],
    batch: usize,
    channels: usize,
    plane: usize,
    gamma: &[f64],
    beta: &[f64],
) -> (Vec<f64>, BnCache) {
    let m = (batch * plane) as f64;
    let mut mean = vec![0.0; channels];
    let mut var = vec![0.0; channels];
    for n in 0..batch {
        for c in 0..channels {
            let p = &x[(n * channels + c) * plane..][..plane];
            mean[c] += p.iter().sum::<f64>();
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);
    for n in 0..batch {
        for c in 0..channels {
            let p = &x[(n * channels + c) * plane..][..plane];
            var[c] += p.iter().map(|v| (v - mean[c]) * (v - mean[c])).sum::<f64>();
        }
    }
    var.iter_mut().for_each(|v| *v /= m);
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
    let mut xhat = vec![0.0; x.len()];
    let mut y = vec![0.0; x.len()];
    for n in 0..batch {
        for c in 0..channels {
            let off = (n * channels + c) * plane;
            for i in off..off + plane {
                xhat[i] = (x[i] - mean[c]) * inv_std[c];
                y[i] = gamma[c] * xhat[i] + beta[c];
            }
        }
    }
    (y, BnCache { xhat, inv_std, mean, var })
}

/// Normalizes with fixed (running) statistics.
pub fn bn_forward_eval(
    x: &[f64],
    channels: usize,
    plane: usize,
    gamma: &[f64],
    beta: &[f64],
    mean: &[f64],
    var: &[f64],
) -> Vec<f64> {
    let mut y = x.to_vec();
    for (k, chunk) in y.chunks_mut(plane).enumerate() {
        let c = k % channels;
        let scale = gamma[c] / (var[c] + BN_EPS).sqrt();
        chunk.iter_mut().for_each(|v| *v = (*v - mean[c]) * scale + beta[c]);
    }
    y
}

/// Returns `(d x, d gamma, d beta)`.
pub fn bn_backward(
    grad_out: &[f64],
    cache: &BnCache,
    batch: usize,
    channels: usize,
    plane: usize,
    gamma: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let m = (batch * plane) as f64;
    let mut dgamma = vec![0.0; channels];
    let mut dbeta = vec![0.0; channels];
    for n in 0..batch {
        for c in 0..channels {
            let off = (n * channels + c) * plane;
            for i in off..off + plane {
                dgamma[c] += grad_out[i] * cache.xhat[i];
                dbeta[c] += grad_out[i];
            }
        }
    }
    // dx = gamma * inv_std / m * (m*dy - sum(dy) - xhat * sum(dy*xhat))
    let mut dx = vec![0.0; grad_out.len()];
    for n in 0..batch {
        for c in 0..channels {
            let k = gamma[c] * cache.inv_std[c] / m;
            let off = (n * channels + c) * plane;
            for i in off..off + plane {
                dx[i] = k * (m * grad_out[i] - dbeta[c] - cache.xhat[i] * dgamma[c]);
            }
        }
    }
    (dx, dgamma, dbeta)
}

pub fn relu(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Zeroes the gradient wherever the ReLU output was not positive.
pub fn relu_backward(grad: &mut [f64], output: &[f64]) {
    grad.iter_mut().zip(output).for_each(|(g, &y)| {
        if y <= 0.0 {
            *g = 0.0;
        }
    });
}

/// Global average pooling `[batch][channel][plane] -> [batch][channel]`.
pub fn gap_forward(x: &[f64], plane: usize) -> Vec<f64> {
    x.chunks(plane).map(|p| p.iter().sum::<f64>() / plane as f64).collect()
}

pub fn gap_backward(grad: &[f64], plane: usize) -> Vec<f64> {
    grad.iter().flat_map(|&g| std::iter::repeat_n(g / plane as f64, plane)).collect()
}

/// `y = W x + b` for each row; `weight` is `[out][in]`.
pub fn linear_forward(x: &[f64], batch: usize, weight: &[f64], bias: &[f64]) -> Vec<f64> {
    let out_dim = bias.len();
    let in_dim = weight.len() / out_dim;
    let mut y = Vec::with_capacity(batch * out_dim);
    for row in x.chunks(in_dim).take(batch) {
        for o in 0..out_dim {
            let w = &weight[o * in_dim..(o + 1) * in_dim];
            y.push(bias[o] + w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>());
        }
    }
    y
}

/// Returns `(d x, d weight, d bias)`.
pub fn linear_backward(
    x: &[f64],
    grad_out: &[f64],
    batch: usize,
    weight: &[f64],
    out_dim: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let in_dim = weight.len() / out_dim;
    let mut dx = vec![0.0; batch * in_dim];
    let mut dw = vec![0.0; weight.len()];
    let mut db = vec![0.0; out_dim];
    for n in 0..batch {
        let xr = &x[n * in_dim..(n + 1) * in_dim];
        let gr = &grad_out[n * out_dim..(n + 1) * out_dim];
        let dxr = &mut dx[n * in_dim..(n + 1) * in_dim];
        for o in 0..out_dim {
            let g = gr[o];
            db[o] += g;
            let w = &weight[o * in_dim..(o + 1) * in_dim];
            let dwr = &mut dw[o * in_dim..(o + 1) * in_dim];
            for i in 0..in_dim {
                dwr[i] += g * xr[i];
                dxr[i] += g * w[i];
            }
        }
    }
    (dx, dw, db)
}

/// Numerically stable softmax of one logit row.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Mean cross-entropy and its gradient w.r.t. the logits.
pub fn cross_entropy(logits: &[f64], classes: &[usize], num_classes: usize) -> (f64, Vec<f64>) {
    let batch = classes.len();
    let mut loss = 0.0;
    let mut grad = vec![0.0; logits.len()];
    for (n, &class) in classes.iter().enumerate() {
        let row = &logits[n * num_classes..(n + 1) * num_classes];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        loss += lse - row[class];
        let p = softmax(row);
        for k in 0..num_classes {
            grad[n * num_classes + k] = (p[k] - f64::from(u8::from(k == class))) / batch as f64;
        }
    }
    (loss / batch as f64, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    /// Direct-definition convolution used as an oracle.
    fn conv_naive(input: &[f64], batch: usize, weight: &[f64], s: &ConvShape) -> Vec<f64> {
        let (ho, wo) = (s.out_height(), s.out_width());
        let mut out = vec![0.0; batch * s.out_channels * ho * wo];
        for n in 0..batch {
            for o in 0..s.out_channels {
                for y in 0..ho {
                    for x in 0..wo {
                        let mut acc = 0.0;
                        for c in 0..s.in_channels {
                            for ky in 0..3 {
                                for kx in 0..3 {
                                    let iy = (y * s.stride + ky) as isize - 1;
                                    let ix = (x * s.stride + kx) as isize - 1;
                                    if iy < 0 || ix < 0 || iy >= s.height as isize || ix >= s.width as isize {
                                        continue;
                                    }
                                    acc += weight[((o * s.in_channels + c) * 3 + ky) * 3 + kx]
                                        * input[((n * s.in_channels + c) * s.height + iy as usize) * s.width
                                            + ix as usize];
                                }
                            }
                        }
                        out[((n * s.out_channels + o) * ho + y) * wo + x] = acc;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn conv_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (h, w, stride) in [(5, 5, 1), (6, 6, 2), (7, 4, 2), (2, 2, 1), (3, 3, 2), (9, 9, 3), (1, 1, 1), (1, 2, 1), (2, 1, 2)] {
            let s = ConvShape { in_channels: 2, out_channels: 3, height: h, width: w, stride };
            let input = random(2 * s.in_len(), &mut rng);
            let weight = random(3 * 2 * 9, &mut rng);
            let fast = conv_forward(&input, 2, &weight, &s);
            let slow = conv_naive(&input, 2, &weight, &s);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12, "{h}x{w}/{stride}");
            }
        }
    }

    /// Checks `<grad_out, d f(input)>` against the adjoint via finite differences
    /// of a random projection of the output.
    #[test]
    fn conv_adjoint_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for stride in [1, 2] {
            let s = ConvShape { in_channels: 2, out_channels: 2, height: 5, width: 4, stride };
            let batch = 2;
            let input = random(batch * s.in_len(), &mut rng);
            let weight = random(2 * 2 * 9, &mut rng);
            let proj = random(batch * s.out_len(), &mut rng);
            let f = |i: &[f64], w: &[f64]| -> f64 {
                conv_forward(i, batch, w, &s).iter().zip(&proj).map(|(a, b)| a * b).sum()
            };
            let (gi, gw) = conv_backward(&input, &proj, batch, &weight, &s);
            let h = 1e-6;
            for k in 0..input.len() {
                let (mut p, mut m) = (input.clone(), input.clone());
                p[k] += h;
                m[k] -= h;
                assert!(((f(&p, &weight) - f(&m, &weight)) / (2.0 * h) - gi[k]).abs() < 1e-7);
            }
            for k in 0..weight.len() {
                let (mut p, mut m) = (weight.clone(), weight.clone());
                p[k] += h;
                m[k] -= h;
                assert!(((f(&input, &p) - f(&input, &m)) / (2.0 * h) - gw[k]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn bn_adjoint_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (batch, channels, plane) = (3, 2, 4);
        let x = random(batch * channels * plane, &mut rng);
        let gamma = random(channels, &mut rng);
        let beta = random(channels, &mut rng);
        let proj = random(x.len(), &mut rng);
        let f = |x: &[f64], g: &[f64], b: &[f64]| -> f64 {
            let (y, _) = bn_forward_train(x, batch, channels, plane, g, b);
            y.iter().zip(&proj).map(|(a, b)| a * b).sum()
        };
        let (_, cache) = bn_forward_train(&x, batch, channels, plane, &gamma, &beta);
        let (dx, dg, db) = bn_backward(&proj, &cache, batch, channels, plane, &gamma);
        let h = 1e-6;
        for k in 0..x.len() {
            let (mut p, mut m) = (x.clone(), x.clone());
            p[k] += h;
            m[k] -= h;
            let fd = (f(&p, &gamma, &beta) - f(&m, &gamma, &beta)) / (2.0 * h);
            assert!((fd - dx[k]).abs() < 1e-6, "{fd} vs {}", dx[k]);
        }
        for c in 0..channels {
            let (mut p, mut m) = (gamma.clone(), gamma.clone());
            p[c] += h;
            m[c] -= h;
            assert!(((f(&x, &p, &beta) - f(&x, &m, &beta)) / (2.0 * h) - dg[c]).abs() < 1e-6);
            let (mut p, mut m) = (beta.clone(), beta.clone());
            p[c] += h;
            m[c] -= h;
            assert!(((f(&x, &gamma, &p) - f(&x, &gamma, &m)) / (2.0 * h) - db[c]).abs() < 1e-6);
        }
    }

    #[test]
    fn softmax_sums_to_one_and_uniform_loss() {
        let p = softmax(&[1.0, -3.0, 0.5, 10.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (loss, _) = cross_entropy(&[0.0; 8], &[0, 3], 4);
        assert!((loss - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn gap_round_trip_shapes() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        assert_eq!(gap_forward(&x, 4), vec![2.5, 6.5]);
        assert_eq!(gap_backward(&[4.0, 8.0], 4), vec![1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]);
    }
}

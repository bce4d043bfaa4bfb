//! Layer kernels.
//!
//! Weights are stored as `f32`, activations and accumulators as `f64`. Every
//! output value is accumulated in a fixed order (bias first, then kernel
//! row, kernel column, input channel), so results do not depend on how work
//! is split across threads.

use rayon::prelude::*;
use serde::Serialize;

use super::{NetError, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConvParams {
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    pub padding: usize,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl ConvParams {
    /// Weight layout is `[out_channels, kernel_h, kernel_w, in_channels]`.
    pub fn weight_len(&self) -> usize {
        self.out_channels * self.kernel_h * self.kernel_w * self.in_channels
    }

    pub fn output_dims(&self, rows: usize, cols: usize) -> Result<(usize, usize)> {
        if self.stride == 0 {
            return Err(NetError::InvalidGeometry("convolution stride is 0".into()));
        }
        let (ph, pw) = (rows + 2 * self.padding, cols + 2 * self.padding);
        if self.kernel_h == 0 || self.kernel_w == 0 || self.kernel_h > ph || self.kernel_w > pw {
            return Err(NetError::InvalidGeometry(format!(
                "{}x{} kernel does not fit a padded {ph}x{pw} input",
                self.kernel_h, self.kernel_w
            )));
        }
        Ok((
            (ph - self.kernel_h) / self.stride + 1,
            (pw - self.kernel_w) / self.stride + 1,
        ))
    }
}

/// Order in which a `rows x cols x channels` tensor is flattened for a
/// fully-connected layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlattenOrder {
    /// Row, column, channel (channel fastest): the native tensor layout.
    Hwc,
    /// Channel, row, column (column fastest).
    Chw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FcParams {
    pub in_features: usize,
    pub out_features: usize,
    pub flatten: FlattenOrder,
}

impl FcParams {
    /// Weight layout is `[out_features, in_features]`.
    pub fn weight_len(&self) -> usize {
        self.in_features * self.out_features
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PoolParams {
    pub window: usize,
    pub stride: usize,
}

impl PoolParams {
    pub fn output_dims(&self, rows: usize, cols: usize) -> Result<(usize, usize)> {
        if self.window == 0 || self.stride == 0 {
            return Err(NetError::InvalidGeometry(
                "pooling window and stride must be positive".into(),
            ));
        }
        if self.window > rows || self.window > cols {
            return Err(NetError::InvalidGeometry(format!(
                "{w}x{w} pooling window does not fit a {rows}x{cols} input",
                w = self.window
            )));
        }
        Ok((
            (rows - self.window) / self.stride + 1,
            (cols - self.window) / self.stride + 1,
        ))
    }
}

/// Cross-correlation with zero padding.
pub fn conv2d(input: &Tensor, params: &ConvParams, weights: &[f32], bias: &[f32]) -> Result<Tensor> {
    if input.channels() != params.in_channels {
        return Err(NetError::IncompatibleShape(format!(
            "convolution expects {} input channels, got {}",
            params.in_channels,
            input.channels()
        )));
    }
    if weights.len() != params.weight_len() || bias.len() != params.out_channels {
        return Err(NetError::IncompatibleShape(format!(
            "convolution payload has {} weights and {} biases, expected {} and {}",
            weights.len(),
            bias.len(),
            params.weight_len(),
            params.out_channels
        )));
    }
    let (out_h, out_w) = params.output_dims(input.rows(), input.cols())?;
    let (in_h, in_w, cin) = (input.rows(), input.cols(), input.channels());
    let cout = params.out_channels;
    let (kh, kw) = (params.kernel_h, params.kernel_w);
    let pad = params.padding as isize;
    let stride = params.stride as isize;
    let src = input.data();

    let mut out = vec![0.0f64; out_h * out_w * cout];
    out.par_chunks_mut(out_w * cout)
        .enumerate()
        .for_each(|(oy, row)| {
            for ox in 0..out_w {
                let acc = &mut row[ox * cout..(ox + 1) * cout];
                for (a, &b) in acc.iter_mut().zip(bias) {
                    *a = b as f64;
                }
                for ky in 0..kh {
                    let iy = oy as isize * stride + ky as isize - pad;
                    if iy < 0 || iy >= in_h as isize {
                        continue;
                    }
                    for kx in 0..kw {
                        let ix = ox as isize * stride + kx as isize - pad;
                        if ix < 0 || ix >= in_w as isize {
                            continue;
                        }
                        let base = (iy as usize * in_w + ix as usize) * cin;
                        let x = &src[base..base + cin];
                        for (o, a) in acc.iter_mut().enumerate() {
                            let woff = ((o * kh + ky) * kw + kx) * cin;
                            let w = &weights[woff..woff + cin];
                            let mut sum = *a;
                            for (&wv, &xv) in w.iter().zip(x) {
                                sum += wv as f64 * xv;
                            }
                            *a = sum;
                        }
                    }
                }
            }
        });
    Tensor::new(out_h, out_w, cout, out)
}

pub fn relu(input: &Tensor) -> Tensor {
    input.map(|v| v.max(0.0))
}

/// Per-channel window maximum, no padding.
pub fn maxpool(input: &Tensor, params: &PoolParams) -> Result<Tensor> {
    let (out_h, out_w) = params.output_dims(input.rows(), input.cols())?;
    let c = input.channels();
    let mut out = Tensor::zeros(out_h, out_w, c);
    for oy in 0..out_h {
        for ox in 0..out_w {
            for k in 0..c {
                let mut m = f64::NEG_INFINITY;
                for dy in 0..params.window {
                    for dx in 0..params.window {
                        m = m.max(input.at(oy * params.stride + dy, ox * params.stride + dx, k));
                    }
                }
                let idx = out.index(oy, ox, k);
                out.data_mut()[idx] = m;
            }
        }
    }
    Ok(out)
}

/// Flattens a tensor in the given order.
pub fn flatten(input: &Tensor, order: FlattenOrder) -> Vec<f64> {
    match order {
        FlattenOrder::Hwc => input.data().to_vec(),
        FlattenOrder::Chw => {
            let [h, w, c] = input.shape();
            let mut out = Vec::with_capacity(input.len());
            for k in 0..c {
                for i in 0..h {
                    for j in 0..w {
                        out.push(input.at(i, j, k));
                    }
                }
            }
            out
        }
    }
}

/// Matrix-vector product plus bias over the flattened input.
pub fn fc(input: &Tensor, params: &FcParams, weights: &[f32], bias: &[f32]) -> Result<Tensor> {
    if input.len() != params.in_features {
        return Err(NetError::IncompatibleShape(format!(
            "fully-connected layer expects {} inputs, got {}",
            params.in_features,
            input.len()
        )));
    }
    if weights.len() != params.weight_len() || bias.len() != params.out_features {
        return Err(NetError::IncompatibleShape(format!(
            "fully-connected payload has {} weights and {} biases, expected {} and {}",
            weights.len(),
            bias.len(),
            params.weight_len(),
            params.out_features
        )));
    }
    let x = flatten(input, params.flatten);
    let out: Vec<f64> = weights
        .par_chunks(params.in_features)
        .zip(bias.par_iter())
        .map(|(row, &b)| {
            let mut acc = b as f64;
            for (&w, &v) in row.iter().zip(&x) {
                acc += w as f64 * v;
            }
            acc
        })
        .collect();
    Ok(Tensor::flat(out))
}

/// Exp-normalization over all elements, shifted by the maximum.
pub fn softmax(input: &Tensor) -> Tensor {
    let max = input.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = input.data().iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let mut out = input.clone();
    for (o, e) in out.data_mut().iter_mut().zip(exps) {
        *o = e / total;
    }
    out
}

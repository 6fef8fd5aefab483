//! Layer definitions with explicit forward/backward rules.
//!
//! A layer is a [`LayerSpec`] (hyperparameters only); its tensors live in a
//! separate [`LayerParams`] so optimizers and checkpoints can walk them by
//! name. `forward` returns the output plus a [`LayerCache`] that the matching
//! `backward` call consumes; passing a cache produced by a different layer is
//! a contract error.
//!
//! Convolutions are lowered to GEMM through im2col/col2im. The transposed
//! convolution is implemented as the exact adjoint of the corresponding
//! convolution, which makes its gradient rules mirror images of the forward
//! ones.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::Rng;

use super::gemm::{gemm, Trans};
use super::tensor::Tensor;
use super::{gaussian_sample, Mode};

const WEIGHT_INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Conv2d {
        in_ch: usize,
        out_ch: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        padding: (usize, usize),
    },
    ConvTranspose2d {
        in_ch: usize,
        out_ch: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        padding: (usize, usize),
    },
    Dense {
        in_features: usize,
        out_features: usize,
    },
    Embedding {
        num_classes: usize,
        dim: usize,
    },
    BatchNorm {
        channels: usize,
        epsilon: f64,
        momentum: f64,
    },
    LeakyRelu {
        alpha: f64,
    },
    Relu,
    Tanh,
    Sigmoid,
    Softmax,
    Dropout {
        rate: f64,
    },
    Flatten,
    /// Reinterprets (batch, n) as (batch, shape...) — the generator uses this
    /// to turn dense outputs into channel maps.
    Reshape {
        shape: Vec<usize>,
    },
}

/// Conv2d with stride 1 and odd kernels keeps spatial dims; this returns the
/// symmetric padding that realizes it (and the stride-2 halving convention).
pub fn same_padding(kernel: (usize, usize)) -> (usize, usize) {
    ((kernel.0 - 1) / 2, (kernel.1 - 1) / 2)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LayerParams {
    pub weight: Option<Tensor>,
    pub bias: Option<Tensor>,
    pub gamma: Option<Tensor>,
    pub beta: Option<Tensor>,
    pub running_mean: Option<Tensor>,
    pub running_var: Option<Tensor>,
}

#[derive(Debug, Clone, Default)]
pub struct LayerGrads {
    pub weight: Option<Tensor>,
    pub bias: Option<Tensor>,
    pub gamma: Option<Tensor>,
    pub beta: Option<Tensor>,
}

#[derive(Debug, Clone)]
pub enum LayerCache {
    Conv2d { input: Tensor },
    ConvTranspose2d { input: Tensor },
    Dense { input: Tensor },
    Embedding { input: Tensor },
    BatchNorm(BatchNormCache),
    LeakyRelu { input: Tensor },
    Relu { input: Tensor },
    Tanh { output: Tensor },
    Sigmoid { output: Tensor },
    Softmax { output: Tensor },
    Dropout { mask: Option<Tensor> },
    Flatten { input_shape: Vec<usize> },
    Reshape { input_shape: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct BatchNormCache {
    input: Tensor,
    mean: Vec<f64>,
    inv_std: Vec<f64>,
    /// In eval mode the statistics are constants, so the gradient loses the
    /// batch-coupling terms.
    batch_stats: bool,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self {
            LayerSpec::Conv2d { kernel, stride, .. }
            | LayerSpec::ConvTranspose2d { kernel, stride, .. } => {
                if kernel.0 == 0 || kernel.1 == 0 || stride.0 == 0 || stride.1 == 0 {
                    return bad(format!("conv kernel/stride must be positive, got {self:?}"));
                }
                Ok(())
            }
            LayerSpec::Dropout { rate } => {
                if !(0.0..1.0).contains(rate) {
                    return bad(format!("dropout rate must be in [0,1), got {rate}"));
                }
                Ok(())
            }
            LayerSpec::LeakyRelu { alpha } => {
                if *alpha <= 0.0 {
                    return bad(format!("leaky relu alpha must be positive, got {alpha}"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Fresh parameters: Gaussian(0, 0.02 std) weights, zero biases, unit
    /// scale / zero shift for batch norm.
    pub fn init_params(&self, rng: &mut Rng) -> LayerParams {
        let var = WEIGHT_INIT_STD * WEIGHT_INIT_STD;
        match self {
            LayerSpec::Conv2d {
                in_ch,
                out_ch,
                kernel,
                ..
            } => LayerParams {
                weight: Some(gaussian_sample(
                    rng,
                    &[*out_ch, *in_ch, kernel.0, kernel.1],
                    0.0,
                    var,
                )),
                bias: Some(Tensor::zeros(&[*out_ch])),
                ..Default::default()
            },
            LayerSpec::ConvTranspose2d {
                in_ch,
                out_ch,
                kernel,
                ..
            } => LayerParams {
                weight: Some(gaussian_sample(
                    rng,
                    &[*in_ch, *out_ch, kernel.0, kernel.1],
                    0.0,
                    var,
                )),
                bias: Some(Tensor::zeros(&[*out_ch])),
                ..Default::default()
            },
            LayerSpec::Dense {
                in_features,
                out_features,
            } => LayerParams {
                weight: Some(gaussian_sample(
                    rng,
                    &[*out_features, *in_features],
                    0.0,
                    var,
                )),
                bias: Some(Tensor::zeros(&[*out_features])),
                ..Default::default()
            },
            LayerSpec::Embedding { num_classes, dim } => LayerParams {
                weight: Some(gaussian_sample(rng, &[*num_classes, *dim], 0.0, var)),
                ..Default::default()
            },
            LayerSpec::BatchNorm { channels, .. } => LayerParams {
                gamma: Some(Tensor::filled(&[*channels], 1.0)),
                beta: Some(Tensor::zeros(&[*channels])),
                running_mean: Some(Tensor::zeros(&[*channels])),
                running_var: Some(Tensor::filled(&[*channels], 1.0)),
                ..Default::default()
            },
            _ => LayerParams::default(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::ConvTranspose2d { .. } => "conv2d_transpose",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Embedding { .. } => "embedding",
            LayerSpec::BatchNorm { .. } => "batchnorm",
            LayerSpec::LeakyRelu { .. } => "leaky_relu",
            LayerSpec::Relu => "relu",
            LayerSpec::Tanh => "tanh",
            LayerSpec::Sigmoid => "sigmoid",
            LayerSpec::Softmax => "softmax",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Reshape { .. } => "reshape",
        }
    }
}

fn conv_out_len(input: usize, kernel: usize, stride: usize, pad: usize) -> Result<usize> {
    let padded = input + 2 * pad;
    if padded < kernel {
        return Err(Error::Shape {
            expected: vec![kernel],
            got: vec![padded],
            context: "convolution input smaller than kernel".into(),
        });
    }
    Ok((padded - kernel) / stride + 1)
}

fn deconv_out_len(input: usize, kernel: usize, stride: usize, pad: usize) -> Result<usize> {
    let grown = (input - 1) * stride + kernel;
    if grown < 2 * pad {
        return Err(Error::Shape {
            expected: vec![2 * pad],
            got: vec![grown],
            context: "transposed convolution output would be negative".into(),
        });
    }
    Ok(grown - 2 * pad)
}

/// Gathers sliding windows of a (B, C, H, W) batch into a
/// (C*kh*kw, B*OH*OW) matrix so one GEMM covers the whole batch. Work is
/// split across threads by matrix row; every output element is written by
/// exactly one sequential loop, so the result is bit-deterministic.
/// Out-of-range positions contribute zeros (the matrix must be pre-zeroed).
#[allow(clippy::too_many_arguments)]
fn im2col_batched(
    src: &[f64],
    batch: usize,
    c: usize,
    h: usize,
    w: usize,
    kernel: (usize, usize),
    stride: (usize, usize),
    pad: (usize, usize),
    oh: usize,
    ow: usize,
    cols: &mut [f64],
) {
    let p = oh * ow;
    let bp = batch * p;
    debug_assert_eq!(cols.len(), c * kernel.0 * kernel.1 * bp);
    cols.par_chunks_mut(bp).enumerate().for_each(|(row, out_row)| {
        let kj = row % kernel.1;
        let ki = (row / kernel.1) % kernel.0;
        let ch = row / (kernel.0 * kernel.1);
        for b in 0..batch {
            let plane = &src[(b * c + ch) * h * w..][..h * w];
            let out_b = &mut out_row[b * p..(b + 1) * p];
            for oy in 0..oh {
                let iy = (oy * stride.0 + ki) as isize - pad.0 as isize;
                if iy < 0 || iy >= h as isize {
                    continue;
                }
                let src_row = &plane[iy as usize * w..(iy as usize + 1) * w];
                let dst = &mut out_b[oy * ow..(oy + 1) * ow];
                for (ox, d) in dst.iter_mut().enumerate() {
                    let ix = (ox * stride.1 + kj) as isize - pad.1 as isize;
                    if ix >= 0 && ix < w as isize {
                        *d = src_row[ix as usize];
                    }
                }
            }
        }
    });
}

/// Adjoint of [`im2col_batched`]: scatter-adds columns back into (B, C, H, W)
/// images, parallel over samples (each sample's image is a disjoint chunk).
#[allow(clippy::too_many_arguments)]
fn col2im_batched(
    cols: &[f64],
    batch: usize,
    c: usize,
    h: usize,
    w: usize,
    kernel: (usize, usize),
    stride: (usize, usize),
    pad: (usize, usize),
    oh: usize,
    ow: usize,
    dst: &mut [f64],
) {
    let p = oh * ow;
    let bp = batch * p;
    debug_assert_eq!(dst.len(), batch * c * h * w);
    dst.par_chunks_mut(c * h * w).enumerate().for_each(|(b, image)| {
        for ch in 0..c {
            let plane = &mut image[ch * h * w..(ch + 1) * h * w];
            for ki in 0..kernel.0 {
                for kj in 0..kernel.1 {
                    let row = (ch * kernel.0 + ki) * kernel.1 + kj;
                    let col_row = &cols[row * bp + b * p..][..p];
                    for oy in 0..oh {
                        let iy = (oy * stride.0 + ki) as isize - pad.0 as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let dst_row = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                        let src = &col_row[oy * ow..(oy + 1) * ow];
                        for (ox, &v) in src.iter().enumerate() {
                            let ix = (ox * stride.1 + kj) as isize - pad.1 as isize;
                            if ix >= 0 && ix < w as isize {
                                dst_row[ix as usize] += v;
                            }
                        }
                    }
                }
            }
        }
    });
}

/// (B, C, P) -> (C, B*P) so channel rows are contiguous for GEMM.
fn to_channel_major(src: &[f64], batch: usize, channels: usize, plane: usize, dst: &mut [f64]) {
    dst.par_chunks_mut(batch * plane)
        .enumerate()
        .for_each(|(ch, row)| {
            for b in 0..batch {
                row[b * plane..(b + 1) * plane]
                    .copy_from_slice(&src[(b * channels + ch) * plane..][..plane]);
            }
        });
}

/// Inverse of [`to_channel_major`], with an optional per-channel bias add.
fn from_channel_major(
    src: &[f64],
    batch: usize,
    channels: usize,
    plane: usize,
    bias: Option<&[f64]>,
    dst: &mut [f64],
) {
    dst.par_chunks_mut(channels * plane)
        .enumerate()
        .for_each(|(b, image)| {
            for ch in 0..channels {
                let s = &src[ch * batch * plane + b * plane..][..plane];
                let d = &mut image[ch * plane..(ch + 1) * plane];
                match bias {
                    Some(bias) => {
                        let bv = bias[ch];
                        for (o, &x) in d.iter_mut().zip(s) {
                            *o = x + bv;
                        }
                    }
                    None => d.copy_from_slice(s),
                }
            }
        });
}

fn weight_of<'p>(params: &'p LayerParams, spec: &LayerSpec) -> Result<&'p Tensor> {
    params.weight.as_ref().ok_or_else(|| {
        Error::Contract(format!("{} params missing weight tensor", spec.kind_name()))
    })
}

fn bias_of<'p>(params: &'p LayerParams, spec: &LayerSpec) -> Result<&'p Tensor> {
    params
        .bias
        .as_ref()
        .ok_or_else(|| Error::Contract(format!("{} params missing bias tensor", spec.kind_name())))
}

pub fn forward(
    spec: &LayerSpec,
    params: &mut LayerParams,
    input: &Tensor,
    mode: Mode,
    rng: &mut Rng,
) -> Result<(Tensor, LayerCache)> {
    match spec {
        LayerSpec::Conv2d {
            in_ch,
            out_ch,
            kernel,
            stride,
            padding,
        } => {
            let (n, c, h, w) = input.dims4("conv2d input")?;
            if c != *in_ch {
                return Err(Error::Shape {
                    expected: vec![n, *in_ch, h, w],
                    got: input.shape().to_vec(),
                    context: "conv2d channel count".into(),
                });
            }
            let oh = conv_out_len(h, kernel.0, stride.0, padding.0)?;
            let ow = conv_out_len(w, kernel.1, stride.1, padding.1)?;
            let weight = weight_of(params, spec)?;
            let bias = bias_of(params, spec)?;
            let k = c * kernel.0 * kernel.1;
            let p = oh * ow;
            let bp = n * p;
            let mut cols = vec![0.0; k * bp];
            im2col_batched(
                input.data(),
                n,
                c,
                h,
                w,
                *kernel,
                *stride,
                *padding,
                oh,
                ow,
                &mut cols,
            );
            let mut y_mat = vec![0.0; *out_ch * bp];
            gemm(
                *out_ch,
                k,
                bp,
                1.0,
                weight.data(),
                Trans::No,
                &cols,
                Trans::No,
                0.0,
                &mut y_mat,
            );
            let mut out = Tensor::zeros(&[n, *out_ch, oh, ow]);
            from_channel_major(&y_mat, n, *out_ch, p, Some(bias.data()), out.data_mut());
            Ok((
                out,
                LayerCache::Conv2d {
                    input: input.clone(),
                },
            ))
        }
        LayerSpec::ConvTranspose2d {
            in_ch,
            out_ch,
            kernel,
            stride,
            padding,
        } => {
            let (n, c, h, w) = input.dims4("conv2d_transpose input")?;
            if c != *in_ch {
                return Err(Error::Shape {
                    expected: vec![n, *in_ch, h, w],
                    got: input.shape().to_vec(),
                    context: "conv2d_transpose channel count".into(),
                });
            }
            let oh = deconv_out_len(h, kernel.0, stride.0, padding.0)?;
            let ow = deconv_out_len(w, kernel.1, stride.1, padding.1)?;
            // Sanity: the adjoint convolution over (oh, ow) must land back on (h, w).
            debug_assert_eq!(conv_out_len(oh, kernel.0, stride.0, padding.0)?, h);
            debug_assert_eq!(conv_out_len(ow, kernel.1, stride.1, padding.1)?, w);
            let weight = weight_of(params, spec)?; // (in_ch, out_ch, kh, kw)
            let bias = bias_of(params, spec)?;
            let k_out = *out_ch * kernel.0 * kernel.1;
            let p_in = h * w;
            let bp = n * p_in;
            let mut x_mat = vec![0.0; c * bp];
            to_channel_major(input.data(), n, c, p_in, &mut x_mat);
            let mut cols = vec![0.0; k_out * bp];
            gemm(
                k_out,
                c,
                bp,
                1.0,
                weight.data(),
                Trans::Yes,
                &x_mat,
                Trans::No,
                0.0,
                &mut cols,
            );
            let mut out = Tensor::zeros(&[n, *out_ch, oh, ow]);
            col2im_batched(
                &cols,
                n,
                *out_ch,
                oh,
                ow,
                *kernel,
                *stride,
                *padding,
                h,
                w,
                out.data_mut(),
            );
            for b in 0..n {
                let dst = &mut out.data_mut()[b * *out_ch * oh * ow..(b + 1) * *out_ch * oh * ow];
                for oc in 0..*out_ch {
                    let bv = bias.data()[oc];
                    for v in &mut dst[oc * oh * ow..(oc + 1) * oh * ow] {
                        *v += bv;
                    }
                }
            }
            Ok((
                out,
                LayerCache::ConvTranspose2d {
                    input: input.clone(),
                },
            ))
        }
        LayerSpec::Dense {
            in_features,
            out_features,
        } => {
            let (n, f) = input.dims2("dense input")?;
            if f != *in_features {
                return Err(Error::Shape {
                    expected: vec![n, *in_features],
                    got: input.shape().to_vec(),
                    context: "dense feature count".into(),
                });
            }
            let weight = weight_of(params, spec)?; // (out, in)
            let bias = bias_of(params, spec)?;
            let mut out = Tensor::zeros(&[n, *out_features]);
            gemm(
                n,
                f,
                *out_features,
                1.0,
                input.data(),
                Trans::No,
                weight.data(),
                Trans::Yes,
                0.0,
                out.data_mut(),
            );
            for b in 0..n {
                let row = &mut out.data_mut()[b * *out_features..(b + 1) * *out_features];
                for (v, &bv) in row.iter_mut().zip(bias.data()) {
                    *v += bv;
                }
            }
            Ok((
                out,
                LayerCache::Dense {
                    input: input.clone(),
                },
            ))
        }
        LayerSpec::Embedding { num_classes, dim } => {
            if input.shape().len() != 1 {
                return Err(Error::Shape {
                    expected: vec![0],
                    got: input.shape().to_vec(),
                    context: "embedding expects a 1-d index tensor".into(),
                });
            }
            let weight = weight_of(params, spec)?;
            let n = input.len();
            let mut out = Tensor::zeros(&[n, *dim]);
            for (b, &raw) in input.data().iter().enumerate() {
                let idx = raw as usize;
                if raw.fract() != 0.0 || raw < 0.0 || idx >= *num_classes {
                    return Err(Error::Domain(format!(
                        "embedding index {raw} outside 0..{num_classes}"
                    )));
                }
                out.data_mut()[b * dim..(b + 1) * dim]
                    .copy_from_slice(&weight.data()[idx * dim..(idx + 1) * dim]);
            }
            Ok((
                out,
                LayerCache::Embedding {
                    input: input.clone(),
                },
            ))
        }
        LayerSpec::BatchNorm {
            channels,
            epsilon,
            momentum,
        } => {
            let (n, c, h, w) = input.dims4("batchnorm input")?;
            if c != *channels {
                return Err(Error::Shape {
                    expected: vec![n, *channels, h, w],
                    got: input.shape().to_vec(),
                    context: "batchnorm channel count".into(),
                });
            }
            let gamma = params
                .gamma
                .as_ref()
                .ok_or_else(|| Error::Contract("batchnorm missing gamma".into()))?
                .clone();
            let beta = params
                .beta
                .as_ref()
                .ok_or_else(|| Error::Contract("batchnorm missing beta".into()))?
                .clone();
            let plane = h * w;
            let m = n * plane;
            let mut mean = vec![0.0; c];
            let mut var = vec![0.0; c];
            match mode {
                Mode::Train => {
                    for ch in 0..c {
                        let mut sum = 0.0;
                        for b in 0..n {
                            let base = (b * c + ch) * plane;
                            for &x in &input.data()[base..base + plane] {
                                sum += x;
                            }
                        }
                        let mu = sum / m as f64;
                        let mut sq = 0.0;
                        for b in 0..n {
                            let base = (b * c + ch) * plane;
                            for &x in &input.data()[base..base + plane] {
                                let d = x - mu;
                                sq += d * d;
                            }
                        }
                        mean[ch] = mu;
                        var[ch] = sq / m as f64;
                    }
                    let rm = params
                        .running_mean
                        .as_mut()
                        .ok_or_else(|| Error::Contract("batchnorm missing running_mean".into()))?;
                    for (r, &mu) in rm.data_mut().iter_mut().zip(&mean) {
                        *r = *momentum * *r + (1.0 - *momentum) * mu;
                    }
                    let rv = params
                        .running_var
                        .as_mut()
                        .ok_or_else(|| Error::Contract("batchnorm missing running_var".into()))?;
                    for (r, &v) in rv.data_mut().iter_mut().zip(&var) {
                        *r = *momentum * *r + (1.0 - *momentum) * v;
                    }
                }
                Mode::Eval => {
                    let rm = params
                        .running_mean
                        .as_ref()
                        .ok_or_else(|| Error::Contract("batchnorm missing running_mean".into()))?;
                    let rv = params
                        .running_var
                        .as_ref()
                        .ok_or_else(|| Error::Contract("batchnorm missing running_var".into()))?;
                    mean.copy_from_slice(rm.data());
                    var.copy_from_slice(rv.data());
                }
            }
            let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + epsilon).sqrt()).collect();
            let mut out = Tensor::zeros(input.shape());
            for b in 0..n {
                for ch in 0..c {
                    let base = (b * c + ch) * plane;
                    let g = gamma.data()[ch];
                    let bt = beta.data()[ch];
                    let mu = mean[ch];
                    let is = inv_std[ch];
                    for (o, &x) in out.data_mut()[base..base + plane]
                        .iter_mut()
                        .zip(&input.data()[base..base + plane])
                    {
                        *o = g * (x - mu) * is + bt;
                    }
                }
            }
            Ok((
                out,
                LayerCache::BatchNorm(BatchNormCache {
                    input: input.clone(),
                    mean,
                    inv_std,
                    batch_stats: mode == Mode::Train,
                }),
            ))
        }
        LayerSpec::LeakyRelu { alpha } => {
            let out = input.map(|x| if x >= 0.0 { x } else { alpha * x });
            Ok((
                out,
                LayerCache::LeakyRelu {
                    input: input.clone(),
                },
            ))
        }
        LayerSpec::Relu => {
            let out = input.map(|x| x.max(0.0));
            Ok((
                out,
                LayerCache::Relu {
                    input: input.clone(),
                },
            ))
        }
        LayerSpec::Tanh => {
            let out = input.map(f64::tanh);
            Ok((
                out.clone(),
                LayerCache::Tanh { output: out },
            ))
        }
        LayerSpec::Sigmoid => {
            // Clamp keeps outputs strictly inside (0, 1) even for huge logits.
            let out = input.map(|x| {
                let y = 1.0 / (1.0 + (-x).exp());
                y.clamp(1e-12, 1.0 - 1e-12)
            });
            Ok((
                out.clone(),
                LayerCache::Sigmoid { output: out },
            ))
        }
        LayerSpec::Softmax => {
            let (n, c) = input.dims2("softmax input")?;
            let mut out = Tensor::zeros(&[n, c]);
            for b in 0..n {
                let row = &input.data()[b * c..(b + 1) * c];
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let dst = &mut out.data_mut()[b * c..(b + 1) * c];
                let mut sum = 0.0;
                for (d, &x) in dst.iter_mut().zip(row) {
                    *d = (x - max).exp();
                    sum += *d;
                }
                for d in dst.iter_mut() {
                    *d /= sum;
                }
            }
            Ok((
                out.clone(),
                LayerCache::Softmax { output: out },
            ))
        }
        LayerSpec::Dropout { rate } => match mode {
            Mode::Eval => Ok((input.clone(), LayerCache::Dropout { mask: None })),
            Mode::Train => {
                let keep = 1.0 - rate;
                let mut mask = Tensor::zeros(input.shape());
                for m in mask.data_mut() {
                    *m = if rng.uniform() < *rate { 0.0 } else { 1.0 / keep };
                }
                let out = input.mul(&mask)?;
                Ok((out, LayerCache::Dropout { mask: Some(mask) }))
            }
        },
        LayerSpec::Flatten => {
            let shape = input.shape().to_vec();
            if shape.is_empty() {
                return Err(Error::Domain("flatten on 0-d tensor".into()));
            }
            let n = shape[0];
            let rest: usize = shape[1..].iter().product();
            let out = input.clone().reshaped(&[n, rest])?;
            Ok((out, LayerCache::Flatten { input_shape: shape }))
        }
        LayerSpec::Reshape { shape } => {
            let in_shape = input.shape().to_vec();
            if in_shape.is_empty() {
                return Err(Error::Domain("reshape on 0-d tensor".into()));
            }
            let n = in_shape[0];
            let mut full = vec![n];
            full.extend_from_slice(shape);
            let out = input.clone().reshaped(&full)?;
            Ok((
                out,
                LayerCache::Reshape {
                    input_shape: in_shape,
                },
            ))
        }
    }
}

fn cache_mismatch(spec: &LayerSpec) -> Error {
    Error::Contract(format!(
        "backward cache does not match layer {}",
        spec.kind_name()
    ))
}

pub fn backward(
    spec: &LayerSpec,
    params: &LayerParams,
    cache: &LayerCache,
    grad_out: &Tensor,
) -> Result<(Tensor, LayerGrads)> {
    backward_impl(spec, params, cache, grad_out, true)
}

/// Backward that only propagates the input gradient, skipping parameter
/// gradients. Used when backpropagating through a frozen model.
pub fn backward_input_only(
    spec: &LayerSpec,
    params: &LayerParams,
    cache: &LayerCache,
    grad_out: &Tensor,
) -> Result<Tensor> {
    backward_impl(spec, params, cache, grad_out, false).map(|(g, _)| g)
}

fn backward_impl(
    spec: &LayerSpec,
    params: &LayerParams,
    cache: &LayerCache,
    grad_out: &Tensor,
    with_param_grads: bool,
) -> Result<(Tensor, LayerGrads)> {
    match (spec, cache) {
        (
            LayerSpec::Conv2d {
                in_ch,
                out_ch,
                kernel,
                stride,
                padding,
            },
            LayerCache::Conv2d { input },
        ) => {
            let (n, c, h, w) = input.dims4("conv2d cached input")?;
            let (gn, gc, oh, ow) = grad_out.dims4("conv2d grad_out")?;
            if gn != n || gc != *out_ch {
                return Err(cache_mismatch(spec));
            }
            let _ = in_ch;
            let weight = weight_of(params, spec)?;
            let k = c * kernel.0 * kernel.1;
            let p = oh * ow;
            let bp = n * p;
            let mut dy_mat = vec![0.0; *out_ch * bp];
            to_channel_major(grad_out.data(), n, *out_ch, p, &mut dy_mat);
            let mut grads = LayerGrads::default();
            let mut cols = vec![0.0; k * bp];
            if with_param_grads {
                im2col_batched(
                    input.data(),
                    n,
                    c,
                    h,
                    w,
                    *kernel,
                    *stride,
                    *padding,
                    oh,
                    ow,
                    &mut cols,
                );
                // dW = dY * colsᵀ
                let mut grad_weight = Tensor::zeros(weight.shape());
                gemm(
                    *out_ch,
                    bp,
                    k,
                    1.0,
                    &dy_mat,
                    Trans::No,
                    &cols,
                    Trans::Yes,
                    0.0,
                    grad_weight.data_mut(),
                );
                let mut grad_bias = Tensor::zeros(&[*out_ch]);
                for oc in 0..*out_ch {
                    grad_bias.data_mut()[oc] = dy_mat[oc * bp..(oc + 1) * bp].iter().sum();
                }
                grads.weight = Some(grad_weight);
                grads.bias = Some(grad_bias);
            }
            // dcols = Wᵀ * dY
            let mut dcols = cols; // reuse the buffer
            gemm(
                k,
                *out_ch,
                bp,
                1.0,
                weight.data(),
                Trans::Yes,
                &dy_mat,
                Trans::No,
                0.0,
                &mut dcols,
            );
            let mut grad_input = Tensor::zeros(input.shape());
            col2im_batched(
                &dcols,
                n,
                c,
                h,
                w,
                *kernel,
                *stride,
                *padding,
                oh,
                ow,
                grad_input.data_mut(),
            );
            Ok((grad_input, grads))
        }
        (
            LayerSpec::ConvTranspose2d {
                in_ch,
                out_ch,
                kernel,
                stride,
                padding,
            },
            LayerCache::ConvTranspose2d { input },
        ) => {
            let (n, c, h, w) = input.dims4("conv2d_transpose cached input")?;
            let (gn, gc, oh, ow) = grad_out.dims4("conv2d_transpose grad_out")?;
            if gn != n || gc != *out_ch || c != *in_ch {
                return Err(cache_mismatch(spec));
            }
            let weight = weight_of(params, spec)?;
            let k_out = *out_ch * kernel.0 * kernel.1;
            let p_in = h * w;
            let bp = n * p_in;
            let mut dcols = vec![0.0; k_out * bp];
            im2col_batched(
                grad_out.data(),
                n,
                *out_ch,
                oh,
                ow,
                *kernel,
                *stride,
                *padding,
                h,
                w,
                &mut dcols,
            );
            // dx = W * dcols
            let mut dx_mat = vec![0.0; c * bp];
            gemm(
                c,
                k_out,
                bp,
                1.0,
                weight.data(),
                Trans::No,
                &dcols,
                Trans::No,
                0.0,
                &mut dx_mat,
            );
            let mut grad_input = Tensor::zeros(input.shape());
            from_channel_major(&dx_mat, n, c, p_in, None, grad_input.data_mut());
            let mut grads = LayerGrads::default();
            if with_param_grads {
                // dW = x * dcolsᵀ
                let mut x_mat = dx_mat; // reuse the buffer
                to_channel_major(input.data(), n, c, p_in, &mut x_mat);
                let mut grad_weight = Tensor::zeros(weight.shape());
                gemm(
                    c,
                    bp,
                    k_out,
                    1.0,
                    &x_mat,
                    Trans::No,
                    &dcols,
                    Trans::Yes,
                    0.0,
                    grad_weight.data_mut(),
                );
                let mut grad_bias = Tensor::zeros(&[*out_ch]);
                for b in 0..n {
                    let dy =
                        &grad_out.data()[b * *out_ch * oh * ow..(b + 1) * *out_ch * oh * ow];
                    for oc in 0..*out_ch {
                        grad_bias.data_mut()[oc] +=
                            dy[oc * oh * ow..(oc + 1) * oh * ow].iter().sum::<f64>();
                    }
                }
                grads.weight = Some(grad_weight);
                grads.bias = Some(grad_bias);
            }
            Ok((grad_input, grads))
        }
        (
            LayerSpec::Dense {
                in_features,
                out_features,
            },
            LayerCache::Dense { input },
        ) => {
            let (n, _) = input.dims2("dense cached input")?;
            let (gn, go) = grad_out.dims2("dense grad_out")?;
            if gn != n || go != *out_features {
                return Err(cache_mismatch(spec));
            }
            let weight = weight_of(params, spec)?;
            let mut grad_input = Tensor::zeros(&[n, *in_features]);
            gemm(
                n,
                *out_features,
                *in_features,
                1.0,
                grad_out.data(),
                Trans::No,
                weight.data(),
                Trans::No,
                0.0,
                grad_input.data_mut(),
            );
            let mut grads = LayerGrads::default();
            if with_param_grads {
                let mut grad_weight = Tensor::zeros(&[*out_features, *in_features]);
                gemm(
                    *out_features,
                    n,
                    *in_features,
                    1.0,
                    grad_out.data(),
                    Trans::Yes,
                    input.data(),
                    Trans::No,
                    0.0,
                    grad_weight.data_mut(),
                );
                let mut grad_bias = Tensor::zeros(&[*out_features]);
                for b in 0..n {
                    for (gb, &g) in grad_bias
                        .data_mut()
                        .iter_mut()
                        .zip(&grad_out.data()[b * *out_features..(b + 1) * *out_features])
                    {
                        *gb += g;
                    }
                }
                grads.weight = Some(grad_weight);
                grads.bias = Some(grad_bias);
            }
            Ok((grad_input, grads))
        }
        (LayerSpec::Embedding { num_classes, dim }, LayerCache::Embedding { input }) => {
            let weight = weight_of(params, spec)?;
            let _ = num_classes;
            if !with_param_grads {
                return Ok((Tensor::zeros(input.shape()), LayerGrads::default()));
            }
            let mut grad_weight = Tensor::zeros(weight.shape());
            for (b, &raw) in input.data().iter().enumerate() {
                let idx = raw as usize;
                let row = &grad_out.data()[b * dim..(b + 1) * dim];
                for (gw, &g) in grad_weight.data_mut()[idx * dim..(idx + 1) * dim]
                    .iter_mut()
                    .zip(row)
                {
                    *gw += g;
                }
            }
            // Class indices are not differentiable; the input gradient is zero.
            Ok((
                Tensor::zeros(input.shape()),
                LayerGrads {
                    weight: Some(grad_weight),
                    ..Default::default()
                },
            ))
        }
        (LayerSpec::BatchNorm { .. }, LayerCache::BatchNorm(bn)) => {
            let (n, c, h, w) = bn.input.dims4("batchnorm cached input")?;
            if grad_out.shape() != bn.input.shape() {
                return Err(cache_mismatch(spec));
            }
            let gamma = params
                .gamma
                .as_ref()
                .ok_or_else(|| Error::Contract("batchnorm missing gamma".into()))?;
            let plane = h * w;
            let m = (n * plane) as f64;
            let mut grad_input = Tensor::zeros(bn.input.shape());
            let mut grad_gamma = Tensor::zeros(&[c]);
            let mut grad_beta = Tensor::zeros(&[c]);
            for ch in 0..c {
                let mu = bn.mean[ch];
                let is = bn.inv_std[ch];
                let g = gamma.data()[ch];
                let mut sum_dy = 0.0;
                let mut sum_dy_xhat = 0.0;
                for b in 0..n {
                    let base = (b * c + ch) * plane;
                    for (&dy, &x) in grad_out.data()[base..base + plane]
                        .iter()
                        .zip(&bn.input.data()[base..base + plane])
                    {
                        sum_dy += dy;
                        sum_dy_xhat += dy * (x - mu) * is;
                    }
                }
                grad_beta.data_mut()[ch] = sum_dy;
                grad_gamma.data_mut()[ch] = sum_dy_xhat;
                if bn.batch_stats {
                    // dx = (γ·is/m) · (m·dy − Σdy − x̂·Σ(dy·x̂))
                    let k = g * is / m;
                    for b in 0..n {
                        let base = (b * c + ch) * plane;
                        for i in 0..plane {
                            let dy = grad_out.data()[base + i];
                            let xhat = (bn.input.data()[base + i] - mu) * is;
                            grad_input.data_mut()[base + i] =
                                k * (m * dy - sum_dy - xhat * sum_dy_xhat);
                        }
                    }
                } else {
                    // frozen statistics: plain affine map
                    let k = g * is;
                    for b in 0..n {
                        let base = (b * c + ch) * plane;
                        for i in 0..plane {
                            grad_input.data_mut()[base + i] = k * grad_out.data()[base + i];
                        }
                    }
                }
            }
            Ok((
                grad_input,
                LayerGrads {
                    gamma: Some(grad_gamma),
                    beta: Some(grad_beta),
                    ..Default::default()
                },
            ))
        }
        (LayerSpec::LeakyRelu { alpha }, LayerCache::LeakyRelu { input }) => {
            let grad = grad_zip(grad_out, input, |dy, x| {
                if x >= 0.0 {
                    dy
                } else {
                    alpha * dy
                }
            })?;
            Ok((grad, LayerGrads::default()))
        }
        (LayerSpec::Relu, LayerCache::Relu { input }) => {
            let grad = grad_zip(grad_out, input, |dy, x| if x > 0.0 { dy } else { 0.0 })?;
            Ok((grad, LayerGrads::default()))
        }
        (LayerSpec::Tanh, LayerCache::Tanh { output }) => {
            let grad = grad_zip(grad_out, output, |dy, y| dy * (1.0 - y * y))?;
            Ok((grad, LayerGrads::default()))
        }
        (LayerSpec::Sigmoid, LayerCache::Sigmoid { output }) => {
            let grad = grad_zip(grad_out, output, |dy, y| dy * y * (1.0 - y))?;
            Ok((grad, LayerGrads::default()))
        }
        (LayerSpec::Softmax, LayerCache::Softmax { output }) => {
            let (n, c) = output.dims2("softmax cached output")?;
            if grad_out.shape() != output.shape() {
                return Err(cache_mismatch(spec));
            }
            let mut grad = Tensor::zeros(output.shape());
            for b in 0..n {
                let y = &output.data()[b * c..(b + 1) * c];
                let dy = &grad_out.data()[b * c..(b + 1) * c];
                let dot: f64 = y.iter().zip(dy).map(|(&yi, &di)| yi * di).sum();
                for (g, (&yi, &di)) in grad.data_mut()[b * c..(b + 1) * c]
                    .iter_mut()
                    .zip(y.iter().zip(dy))
                {
                    *g = yi * (di - dot);
                }
            }
            Ok((grad, LayerGrads::default()))
        }
        (LayerSpec::Dropout { .. }, LayerCache::Dropout { mask }) => {
            let grad = match mask {
                None => grad_out.clone(),
                Some(mask) => grad_out.mul(mask)?,
            };
            Ok((grad, LayerGrads::default()))
        }
        (LayerSpec::Flatten, LayerCache::Flatten { input_shape })
        | (LayerSpec::Reshape { .. }, LayerCache::Reshape { input_shape }) => {
            let grad = grad_out.clone().reshaped(input_shape)?;
            Ok((grad, LayerGrads::default()))
        }
        _ => Err(cache_mismatch(spec)),
    }
}

fn grad_zip(
    grad_out: &Tensor,
    saved: &Tensor,
    f: impl Fn(f64, f64) -> f64,
) -> Result<Tensor> {
    if grad_out.shape() != saved.shape() {
        return Err(Error::Shape {
            expected: saved.shape().to_vec(),
            got: grad_out.shape().to_vec(),
            context: "activation backward".into(),
        });
    }
    let data = grad_out
        .data()
        .iter()
        .zip(saved.data())
        .map(|(&dy, &s)| f(dy, s))
        .collect();
    Tensor::from_vec(grad_out.shape(), data)
}

/// Channel-wise concatenation of two NCHW tensors with equal batch and
/// spatial dims.
pub fn concat_channels(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (na, ca, ha, wa) = a.dims4("concat lhs")?;
    let (nb, cb, hb, wb) = b.dims4("concat rhs")?;
    if na != nb || ha != hb || wa != wb {
        return Err(Error::Shape {
            expected: a.shape().to_vec(),
            got: b.shape().to_vec(),
            context: "concat_channels batch/spatial dims".into(),
        });
    }
    let plane = ha * wa;
    let mut out = Tensor::zeros(&[na, ca + cb, ha, wa]);
    for n in 0..na {
        let dst = &mut out.data_mut()[n * (ca + cb) * plane..(n + 1) * (ca + cb) * plane];
        dst[..ca * plane].copy_from_slice(&a.data()[n * ca * plane..(n + 1) * ca * plane]);
        dst[ca * plane..].copy_from_slice(&b.data()[n * cb * plane..(n + 1) * cb * plane]);
    }
    Ok(out)
}

/// Adjoint of [`concat_channels`]: splits a gradient back into the two parts.
pub fn split_channels(grad: &Tensor, ca: usize, cb: usize) -> Result<(Tensor, Tensor)> {
    let (n, c, h, w) = grad.dims4("split input")?;
    if c != ca + cb {
        return Err(Error::Shape {
            expected: vec![n, ca + cb, h, w],
            got: grad.shape().to_vec(),
            context: "split_channels channel count".into(),
        });
    }
    let plane = h * w;
    let mut a = Tensor::zeros(&[n, ca, h, w]);
    let mut b = Tensor::zeros(&[n, cb, h, w]);
    for i in 0..n {
        let src = &grad.data()[i * c * plane..(i + 1) * c * plane];
        a.data_mut()[i * ca * plane..(i + 1) * ca * plane].copy_from_slice(&src[..ca * plane]);
        b.data_mut()[i * cb * plane..(i + 1) * cb * plane].copy_from_slice(&src[ca * plane..]);
    }
    Ok((a, b))
}

//! Minimal deterministic tensor and reverse-mode differentiation core.
//!
//! Everything the GAN and classifier need, nothing more: a flat `f64` tensor,
//! the handful of layer kinds the two architectures use, binary and
//! categorical cross-entropy, Adam with decoupled weight decay, and a
//! finite-difference oracle to keep every backward rule honest. All heavy
//! arithmetic lowers to a single-threaded GEMM, so training is bit-exactly
//! reproducible for a fixed seed.

pub mod adam;
pub mod gemm;
pub mod gradcheck;
pub mod layer;
pub mod loss;
pub mod stack;
pub mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use layer::{
    concat_channels, same_padding, split_channels, LayerCache, LayerGrads, LayerParams, LayerSpec,
};
pub use loss::{bce_loss, categorical_ce_loss};
pub use stack::{Stack, StackGrads, StackParams};
pub use tensor::Tensor;

use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Tensor of independent Gaussian draws (Box-Muller). Variance 0 yields the
/// constant mean without consuming generator state.
pub fn gaussian_sample(rng: &mut Rng, shape: &[usize], mean: f64, variance: f64) -> Tensor {
    let mut t = Tensor::zeros(shape);
    if variance == 0.0 {
        t.map_inplace(|_| mean);
        return t;
    }
    let std = variance.sqrt();
    for v in t.data_mut() {
        *v = mean + std * rng.standard_normal();
    }
    t
}

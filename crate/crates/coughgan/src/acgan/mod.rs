//! Auxiliary classifier GAN: conditional spectrogram synthesis with instance
//! noise and soft labels.
//!
//! The discriminator scores realness and class membership through two heads;
//! the generator is conditioned on the class via an embedding branch. Both
//! stabilization tricks act on the discriminator: pixel-wise Gaussian noise
//! (linearly annealed to zero over the run) is added to its real and
//! generated inputs, and its hard 0/1 validity targets are replaced by
//! uniform draws from the fake and real intervals. The generator trains
//! through the frozen discriminator against hard real targets.

pub mod models;
pub mod train;

pub use models::{
    build_discriminator, build_generator, trunk_stage_shapes, DiscGrads, Discriminator,
    GenGrads, Generator, BASE_COLS, BASE_ROWS, SPEC_COLS, SPEC_ROWS,
};
pub use train::{
    discriminator_step, generator_step, synthesize, train_acgan, DiscStepStats, EpochRecord,
    TrainedAcgan, TrainingHistory,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GanConfig {
    pub latent_dim: usize,
    pub n_classes: usize,
    pub embedding_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub gen_lr: f64,
    pub gen_beta1: f64,
    pub gen_beta2: f64,
    pub disc_lr: f64,
    pub disc_beta1: f64,
    pub disc_beta2: f64,
    pub noise_mean: f64,
    pub noise_initial_variance: f64,
    pub soft_real_range: (f64, f64),
    pub soft_fake_range: (f64, f64),
    pub seed: u64,
    /// First-stage discriminator filter count; stages double it four times.
    /// 32 reproduces the full 32/64/128/256/512 architecture; smaller values
    /// give scaled-down models for smoke testing.
    pub disc_base_filters: usize,
    /// Noise-branch feature-map count; the upsampling stages use half and a
    /// quarter of it. 1024 reproduces the full 1024 -> 512 -> 256 -> 1 path.
    pub gen_base_maps: usize,
    /// Leave batch norm off the first convolution (the usual GAN practice);
    /// off by default to keep all five stages normalized.
    pub skip_first_batchnorm: bool,
    /// Use softmax + categorical cross-entropy on the label head instead of
    /// the per-class sigmoid + binary cross-entropy default.
    pub label_head_softmax: bool,
    /// Emit an intermediate checkpoint every K epochs; 0 means final only.
    pub checkpoint_every: usize,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            latent_dim: 512,
            n_classes: 2,
            embedding_dim: 50,
            epochs: 1000,
            batch_size: 64,
            gen_lr: 0.0002,
            gen_beta1: 0.5,
            gen_beta2: 0.999,
            disc_lr: 0.0002,
            disc_beta1: 0.5,
            disc_beta2: 0.999,
            noise_mean: 0.0,
            noise_initial_variance: 0.1,
            soft_real_range: (0.8, 1.0),
            soft_fake_range: (0.0, 0.2),
            seed: 0,
            disc_base_filters: 32,
            gen_base_maps: 1024,
            skip_first_batchnorm: false,
            label_head_softmax: false,
            checkpoint_every: 0,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.latent_dim == 0 || self.epochs == 0 || self.batch_size == 0 {
            return bad("latent_dim, epochs, and batch_size must be positive".into());
        }
        if self.n_classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.n_classes));
        }
        if self.embedding_dim == 0 {
            return bad("embedding_dim must be positive".into());
        }
        if self.gen_lr <= 0.0 || self.disc_lr <= 0.0 {
            return bad("learning rates must be positive".into());
        }
        if self.noise_initial_variance < 0.0 {
            return bad("noise variance must be non-negative".into());
        }
        let (f0, f1) = self.soft_fake_range;
        let (r0, r1) = self.soft_real_range;
        if !(0.0 <= f0 && f0 < f1 && f1 <= r0 && r0 < r1 && r1 <= 1.0) {
            return bad(format!(
                "soft label ranges must satisfy 0 <= fake < real <= 1, got {:?} and {:?}",
                self.soft_fake_range, self.soft_real_range
            ));
        }
        if self.disc_base_filters == 0 {
            return bad("disc_base_filters must be positive".into());
        }
        if self.gen_base_maps < 4 || self.gen_base_maps % 4 != 0 {
            return bad(format!(
                "gen_base_maps must be a positive multiple of 4, got {}",
                self.gen_base_maps
            ));
        }
        Ok(())
    }
}

/// Linear annealing of the instance-noise variance: exactly `v0` at epoch 0
/// and exactly 0 on the final epoch.
pub fn instance_noise_variance(epoch: usize, total_epochs: usize, v0: f64) -> f64 {
    if total_epochs < 2 {
        return 0.0;
    }
    v0 * (1.0 - epoch as f64 / (total_epochs as f64 - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    Real,
    Fake,
}

/// Discriminator validity target: a uniform draw from the configured soft
/// interval instead of a hard 0 or 1.
pub fn soft_label(kind: LabelKind, cfg: &GanConfig, rng: &mut Rng) -> f64 {
    let (lo, hi) = match kind {
        LabelKind::Real => cfg.soft_real_range,
        LabelKind::Fake => cfg.soft_fake_range,
    };
    rng.uniform_in(lo, hi)
}

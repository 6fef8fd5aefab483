//! coughgan: cough-audio preprocessing, Mel spectrogram features, and
//! conditional GAN augmentation for cough classifiers, on a self-contained
//! tensor/backprop core.

pub mod acgan;
pub mod audio_io;
pub mod book;
pub mod classifier;
pub mod cli;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod features;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};

//! Fixed-shape dB Mel spectrogram extraction and inversion.

pub mod fft;
pub mod griffin_lim;
pub mod mel;
pub mod stft;

pub use griffin_lim::{griffin_lim, griffin_lim_with_residuals};
pub use mel::{
    hz_to_mel, mel_filterbank, mel_spectrogram_db, mel_to_hz, scale_to_unit, to_canonical,
    unscale, MelConfig, MelSpectrogram, UnitSpectrogram,
};
pub use stft::{hann_window_periodic, istft, stft, StftMatrix};

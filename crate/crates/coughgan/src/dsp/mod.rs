//! Preprocessing chain: peak normalization, Butterworth low-pass, resampling,
//! and RMS-hysteresis cough segmentation.

pub mod filter;
pub mod resample;
pub mod segment;

pub use filter::{apply_filter, design_butterworth_lowpass, Biquad, SosFilter};
pub use resample::resample;
pub use segment::{
    extract_segment, normalize_peak, rms, segment_coughs, SegmentBounds, SegmentationParams,
    MIN_SEGMENT_S,
};

use crate::audio_io::AudioClip;
use crate::error::Result;

/// Anti-alias filter defaults applied before downsampling.
pub const DEFAULT_FILTER_ORDER: usize = 4;
pub const DEFAULT_CUTOFF_HZ: f64 = 6000.0;
pub const DEFAULT_TARGET_RATE_HZ: u32 = 12000;

/// Normalize, low-pass, and resample a raw clip; the standard front end
/// before segmentation.
pub fn preprocess(
    clip: &AudioClip,
    filter_order: usize,
    cutoff_hz: f64,
    target_rate_hz: u32,
) -> Result<AudioClip> {
    let normalized = normalize_peak(clip)?;
    // skip the low-pass when it would be a no-op or ill-posed (already at or
    // below the target bandwidth)
    let filtered = if cutoff_hz < f64::from(normalized.sample_rate_hz) / 2.0 {
        let coeffs = design_butterworth_lowpass(filter_order, cutoff_hz, normalized.sample_rate_hz)?;
        apply_filter(&normalized, &coeffs)?
    } else {
        normalized
    };
    resample(&filtered, target_rate_hz)
}

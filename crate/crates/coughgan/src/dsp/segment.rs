//! RMS-hysteresis cough segmentation.
//!
//! Thresholds are fractions of the full-clip RMS. The comparator runs on the
//! rectified signal: a segment opens when |x| reaches the high threshold and
//! stays open until |x| has remained below the low threshold for the hangover
//! time (zero by default, so a single quiet sample closes it). Raw segments
//! are padded, clamped, grown to the minimum length where clamping cut them
//! short, and merged where padding made them overlap.

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};

/// Minimum segment length in seconds, guaranteed via padding.
pub const MIN_SEGMENT_S: f64 = 0.1;

/// Half-open sample interval locating one cough segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentBounds {
    pub start_sample: usize,
    pub end_sample: usize,
}

impl SegmentBounds {
    pub fn len(&self) -> usize {
        self.end_sample - self.start_sample
    }

    pub fn is_empty(&self) -> bool {
        self.end_sample <= self.start_sample
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SegmentationParams {
    /// High threshold as a multiple of the clip RMS.
    pub high_rms_factor: f64,
    /// Low threshold as a multiple of the clip RMS.
    pub low_rms_factor: f64,
    /// Total padding in seconds, split evenly across both ends.
    pub pad_s: f64,
    /// How long the signal must stay below the low threshold before the
    /// segment closes.
    pub hangover_s: f64,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        SegmentationParams {
            high_rms_factor: 2.0,
            low_rms_factor: 0.1,
            pad_s: 0.1,
            hangover_s: 0.0,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.high_rms_factor > self.low_rms_factor && self.low_rms_factor > 0.0) {
            return Err(Error::Domain(format!(
                "need high_rms_factor > low_rms_factor > 0, got {} and {}",
                self.high_rms_factor, self.low_rms_factor
            )));
        }
        if self.pad_s < 0.0 || self.hangover_s < 0.0 {
            return Err(Error::Domain("pad_s and hangover_s must be >= 0".into()));
        }
        Ok(())
    }
}

/// Root mean square of a non-empty sample slice.
pub fn rms(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("rms of an empty signal".into()));
    }
    let sum_sq: f64 = samples.iter().map(|&x| x * x).sum();
    Ok((sum_sq / samples.len() as f64).sqrt())
}

/// Peak normalization to [-1, 1]. All-zero clips pass through unchanged so
/// empty-content files flow through the pipeline harmlessly.
pub fn normalize_peak(clip: &AudioClip) -> Result<AudioClip> {
    if clip.samples.is_empty() {
        return Err(Error::Domain("normalize_peak on an empty clip".into()));
    }
    let peak = clip.samples.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    if peak == 0.0 {
        return Ok(clip.clone());
    }
    Ok(AudioClip {
        samples: clip.samples.iter().map(|&x| x / peak).collect(),
        sample_rate_hz: clip.sample_rate_hz,
    })
}

/// Runs the hysteresis comparator and post-processing; silence yields an
/// empty list.
pub fn segment_coughs(clip: &AudioClip, params: &SegmentationParams) -> Result<Vec<SegmentBounds>> {
    params.validate()?;
    let len = clip.samples.len();
    if len == 0 {
        return Ok(Vec::new());
    }
    let rms = rms(&clip.samples)?;
    if rms == 0.0 {
        return Ok(Vec::new());
    }
    let rate = f64::from(clip.sample_rate_hz);
    let high = params.high_rms_factor * rms;
    let low = params.low_rms_factor * rms;
    let required_quiet = ((params.hangover_s * rate).round() as usize).max(1);

    // comparator walk over |x|
    let mut raw: Vec<(usize, usize)> = Vec::new();
    let mut active_start: Option<usize> = None;
    let mut quiet_start: Option<usize> = None;
    for (i, &x) in clip.samples.iter().enumerate() {
        let a = x.abs();
        match active_start {
            None => {
                if a >= high {
                    active_start = Some(i);
                    quiet_start = None;
                }
            }
            Some(start) => {
                if a < low {
                    let qs = *quiet_start.get_or_insert(i);
                    if i - qs + 1 >= required_quiet {
                        raw.push((start, qs));
                        active_start = None;
                        quiet_start = None;
                    }
                } else {
                    quiet_start = None;
                }
            }
        }
    }
    if let Some(start) = active_start {
        // clip ended while open: a pending quiet run closes at its start,
        // otherwise the segment runs to the end of the clip
        raw.push((start, quiet_start.unwrap_or(len)));
    }

    let pad = (params.pad_s / 2.0 * rate).round() as usize;
    let min_len = (MIN_SEGMENT_S * rate).ceil() as usize;
    let mut padded: Vec<SegmentBounds> = Vec::with_capacity(raw.len());
    for (start, end) in raw {
        let mut s = start.saturating_sub(pad);
        let mut e = (end + pad).min(len);
        // clamping at the clip edges can undercut the guaranteed minimum
        // length; grow back inward where the clip allows it
        if e - s < min_len {
            e = (s + min_len).min(len);
            s = e.saturating_sub(min_len);
        }
        padded.push(SegmentBounds {
            start_sample: s,
            end_sample: e,
        });
    }

    // merge overlaps introduced by padding (input is already sorted by start)
    let mut merged: Vec<SegmentBounds> = Vec::with_capacity(padded.len());
    for seg in padded {
        match merged.last_mut() {
            Some(prev) if seg.start_sample < prev.end_sample => {
                prev.end_sample = prev.end_sample.max(seg.end_sample);
            }
            _ => merged.push(seg),
        }
    }
    Ok(merged)
}

/// Copies `samples[start..end)` at the same rate.
pub fn extract_segment(clip: &AudioClip, bounds: &SegmentBounds) -> Result<AudioClip> {
    if bounds.start_sample >= bounds.end_sample || bounds.end_sample > clip.samples.len() {
        return Err(Error::Domain(format!(
            "segment [{}, {}) out of range for clip of {} samples",
            bounds.start_sample,
            bounds.end_sample,
            clip.samples.len()
        )));
    }
    Ok(AudioClip {
        samples: clip.samples[bounds.start_sample..bounds.end_sample].to_vec(),
        sample_rate_hz: clip.sample_rate_hz,
    })
}

//! Mel filterbank and dB-scaled Mel spectrograms.
//!
//! The scale and normalization follow the Slaney conventions (linear below
//! 1 kHz, logarithmic above, triangles normalized to constant area), which
//! are the defaults of the common Python audio stack — the only choice that
//! reproduces spectrograms computed there.

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};

use super::stft::stft;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct MelConfig {
    pub n_mels: usize,
    pub n_frames: usize,
    pub n_fft: usize,
    pub hop: usize,
    pub sample_rate_hz: u32,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub top_db: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        MelConfig {
            n_mels: 128,
            n_frames: 24,
            n_fft: 2048,
            hop: 512,
            sample_rate_hz: 12000,
            fmin_hz: 0.0,
            fmax_hz: 6000.0,
            top_db: 80.0,
        }
    }
}

impl MelConfig {
    /// Segment length that yields exactly `n_frames` centered STFT frames:
    /// (n_frames - 1) * hop. With the defaults, 23 * 512 = 11776 samples.
    pub fn canonical_len(&self) -> usize {
        (self.n_frames - 1) * self.hop
    }

    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_mels == 0 || self.n_frames == 0 || self.hop == 0 || self.n_fft < 2 {
            return Err(Error::Domain("mel config dimensions must be positive".into()));
        }
        let nyquist = f64::from(self.sample_rate_hz) / 2.0;
        if !(self.fmin_hz >= 0.0 && self.fmin_hz < self.fmax_hz && self.fmax_hz <= nyquist) {
            return Err(Error::Domain(format!(
                "need 0 <= fmin < fmax <= Nyquist, got {} and {}",
                self.fmin_hz, self.fmax_hz
            )));
        }
        if self.top_db <= 0.0 {
            return Err(Error::Domain("top_db must be positive".into()));
        }
        Ok(())
    }
}

/// dB-scaled Mel matrix (n_mels x n_frames, row-major) with its extraction
/// parameters. Max entry is 0 dB; min entry is at least -top_db.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub values: Vec<f64>,
    pub config: MelConfig,
}

/// The same matrix affinely mapped to [-1, 1], the range the GAN works in.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSpectrogram {
    pub values: Vec<f64>,
    pub n_mels: usize,
    pub n_frames: usize,
}

/// Slaney mel scale: linear below 1 kHz, logarithmic above.
pub fn hz_to_mel(hz: f64) -> f64 {
    let f_sp = 200.0 / 3.0;
    let min_log_hz = 1000.0;
    let min_log_mel = min_log_hz / f_sp;
    let logstep = 6.4_f64.ln() / 27.0;
    if hz >= min_log_hz {
        min_log_mel + (hz / min_log_hz).ln() / logstep
    } else {
        hz / f_sp
    }
}

pub fn mel_to_hz(mel: f64) -> f64 {
    let f_sp = 200.0 / 3.0;
    let min_log_hz = 1000.0;
    let min_log_mel = min_log_hz / f_sp;
    let logstep = 6.4_f64.ln() / 27.0;
    if mel >= min_log_mel {
        min_log_hz * (logstep * (mel - min_log_mel)).exp()
    } else {
        f_sp * mel
    }
}

/// Triangular filterbank (n_mels x bins) with Slaney area normalization:
/// each row is scaled by 2 / (f[m+2] - f[m]).
pub fn mel_filterbank(cfg: &MelConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let bins = cfg.bins();
    let mel_lo = hz_to_mel(cfg.fmin_hz);
    let mel_hi = hz_to_mel(cfg.fmax_hz);
    // n_mels + 2 corner frequencies, equally spaced in mel
    let corners: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    let bin_freqs: Vec<f64> = (0..bins)
        .map(|k| k as f64 * f64::from(cfg.sample_rate_hz) / cfg.n_fft as f64)
        .collect();
    let mut bank = vec![0.0; cfg.n_mels * bins];
    for m in 0..cfg.n_mels {
        let (lo, center, hi) = (corners[m], corners[m + 1], corners[m + 2]);
        let enorm = 2.0 / (hi - lo);
        for (k, &f) in bin_freqs.iter().enumerate() {
            let rising = (f - lo) / (center - lo);
            let falling = (hi - f) / (hi - center);
            let w = rising.min(falling).max(0.0);
            bank[m * bins + k] = w * enorm;
        }
    }
    Ok(bank)
}

/// Center frequencies of the filterbank rows, strictly increasing.
pub fn mel_center_frequencies(cfg: &MelConfig) -> Vec<f64> {
    let mel_lo = hz_to_mel(cfg.fmin_hz);
    let mel_hi = hz_to_mel(cfg.fmax_hz);
    (1..=cfg.n_mels)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect()
}

/// Forces the canonical segment length: longer segments are center-cropped,
/// shorter ones zero-padded symmetrically (extra zero goes to the back).
pub fn to_canonical(segment: &AudioClip, cfg: &MelConfig) -> Result<Vec<f64>> {
    if segment.samples.is_empty() {
        return Err(Error::Domain("empty segment".into()));
    }
    if segment.sample_rate_hz != cfg.sample_rate_hz {
        return Err(Error::Domain(format!(
            "segment at {} Hz, expected {}",
            segment.sample_rate_hz, cfg.sample_rate_hz
        )));
    }
    let target = cfg.canonical_len();
    let len = segment.samples.len();
    Ok(match len.cmp(&target) {
        std::cmp::Ordering::Equal => segment.samples.clone(),
        std::cmp::Ordering::Greater => {
            let start = (len - target) / 2;
            segment.samples[start..start + target].to_vec()
        }
        std::cmp::Ordering::Less => {
            let front = (target - len) / 2;
            let mut out = vec![0.0; target];
            out[front..front + len].copy_from_slice(&segment.samples);
            out
        }
    })
}

/// Power spectrogram -> mel projection -> dB relative to the maximum,
/// clamped below at -top_db. Output shape is exactly n_mels x n_frames.
pub fn mel_spectrogram_db(segment: &AudioClip, cfg: &MelConfig) -> Result<MelSpectrogram> {
    let canonical = to_canonical(segment, cfg)?;
    let m = stft(&canonical, cfg.n_fft, cfg.hop)?;
    debug_assert_eq!(m.frames, cfg.n_frames);
    let bins = cfg.bins();
    let bank = mel_filterbank(cfg)?;
    let mut mel_power = vec![0.0; cfg.n_mels * cfg.n_frames];
    for row in 0..cfg.n_mels {
        for t in 0..cfg.n_frames {
            let mut acc = 0.0;
            for k in 0..bins {
                let w = bank[row * bins + k];
                if w != 0.0 {
                    acc += w * m.at(k, t).norm_sqr();
                }
            }
            mel_power[row * cfg.n_frames + t] = acc;
        }
    }
    let max_power = mel_power.iter().cloned().fold(0.0_f64, f64::max);
    if max_power <= 0.0 {
        return Err(Error::Domain(
            "all-zero canonical signal: no reference for dB scaling".into(),
        ));
    }
    let values = mel_power
        .iter()
        .map(|&p| (10.0 * (p / max_power).log10()).max(-cfg.top_db))
        .collect();
    Ok(MelSpectrogram {
        values,
        config: *cfg,
    })
}

/// Affine map [-top_db, 0] -> [-1, 1].
pub fn scale_to_unit(spec: &MelSpectrogram) -> Result<UnitSpectrogram> {
    let half = spec.config.top_db / 2.0;
    let mut values = Vec::with_capacity(spec.values.len());
    for &db in &spec.values {
        if !(-spec.config.top_db..=0.0).contains(&db) {
            return Err(Error::Domain(format!(
                "dB value {db} outside [-{}, 0]",
                spec.config.top_db
            )));
        }
        values.push((db + half) / half);
    }
    Ok(UnitSpectrogram {
        values,
        n_mels: spec.config.n_mels,
        n_frames: spec.config.n_frames,
    })
}

/// Exact inverse of [`scale_to_unit`].
pub fn unscale(unit: &UnitSpectrogram, cfg: &MelConfig) -> Result<MelSpectrogram> {
    if unit.values.len() != cfg.n_mels * cfg.n_frames {
        return Err(Error::Shape {
            expected: vec![cfg.n_mels, cfg.n_frames],
            got: vec![unit.n_mels, unit.n_frames],
            context: "unscale".into(),
        });
    }
    let half = cfg.top_db / 2.0;
    let values = unit
        .values
        .iter()
        .map(|&u| (u * half - half).clamp(-cfg.top_db, 0.0))
        .collect();
    Ok(MelSpectrogram {
        values,
        config: *cfg,
    })
}

//! Butterworth low-pass design (bilinear transform, second-order sections)
//! and causal IIR filtering.

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};

/// One normalized biquad: y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2]
///                              - a1 y[n-1] - a2 y[n-2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    /// Largest pole magnitude of the section.
    pub fn pole_radius(&self) -> f64 {
        let [a1, a2] = self.a;
        let disc = a1 * a1 - 4.0 * a2;
        if disc < 0.0 {
            // conjugate pair; |p|^2 = a2
            a2.sqrt()
        } else {
            let r = disc.sqrt();
            let p1 = (-a1 + r) / 2.0;
            let p2 = (-a1 - r) / 2.0;
            p1.abs().max(p2.abs())
        }
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
}

impl SosFilter {
    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(|s| s.pole_radius() < 1.0)
    }

    /// |H(e^{j 2 pi f / fs})| evaluated directly from the coefficients.
    pub fn magnitude_at(&self, freq_hz: f64, sample_rate_hz: u32) -> f64 {
        let omega = std::f64::consts::TAU * freq_hz / f64::from(sample_rate_hz);
        let (e1re, e1im) = (omega.cos(), -omega.sin());
        let (e2re, e2im) = ((2.0 * omega).cos(), -(2.0 * omega).sin());
        let mut mag = 1.0;
        for s in &self.sections {
            let nre = s.b[0] + s.b[1] * e1re + s.b[2] * e2re;
            let nim = s.b[1] * e1im + s.b[2] * e2im;
            let dre = 1.0 + s.a[0] * e1re + s.a[1] * e2re;
            let dim = s.a[0] * e1im + s.a[1] * e2im;
            mag *= (nre * nre + nim * nim).sqrt() / (dre * dre + dim * dim).sqrt();
        }
        mag
    }
}

/// Bilinear-transform Butterworth low-pass. `order` must be even and at
/// least 2; the cutoff sits strictly inside (0, Nyquist).
pub fn design_butterworth_lowpass(
    order: usize,
    cutoff_hz: f64,
    sample_rate_hz: u32,
) -> Result<SosFilter> {
    if order < 2 || order % 2 != 0 {
        return Err(Error::Domain(format!(
            "butterworth order must be even and >= 2, got {order}"
        )));
    }
    let fs = f64::from(sample_rate_hz);
    if !(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0) {
        return Err(Error::Domain(format!(
            "cutoff {cutoff_hz} Hz outside (0, {}) for fs {fs}",
            fs / 2.0
        )));
    }
    // Pre-warp so the digital response hits -3 dB exactly at cutoff_hz.
    let warped = 2.0 * fs * (std::f64::consts::PI * cutoff_hz / fs).tan();
    let k = 2.0 * fs;
    let n = order as f64;
    let mut sections = Vec::with_capacity(order / 2);
    for pair in 0..order / 2 {
        // analog pole angle for pole index pair+1 (left half-plane)
        let theta = std::f64::consts::PI * (2.0 * (pair as f64 + 1.0) + n - 1.0) / (2.0 * n);
        let re = warped * theta.cos(); // negative
        // analog section: warped^2 / (s^2 - 2 re s + warped^2)
        let a2s = 1.0;
        let a1s = -2.0 * re;
        let a0s = warped * warped;
        let b0s = warped * warped;
        let d0 = a2s * k * k + a1s * k + a0s;
        let d1 = 2.0 * (a0s - a2s * k * k);
        let d2 = a2s * k * k - a1s * k + a0s;
        sections.push(Biquad {
            b: [b0s / d0, 2.0 * b0s / d0, b0s / d0],
            a: [d1 / d0, d2 / d0],
        });
    }
    Ok(SosFilter { sections })
}

/// Causal direct-form-II-transposed cascade with zero initial state; output
/// length equals input length.
pub fn apply_filter(clip: &AudioClip, coeffs: &SosFilter) -> Result<AudioClip> {
    if !coeffs.is_stable() {
        return Err(Error::Domain(
            "filter has poles on or outside the unit circle".into(),
        ));
    }
    let mut samples = clip.samples.clone();
    for s in &coeffs.sections {
        let (mut s1, mut s2) = (0.0, 0.0);
        for x in samples.iter_mut() {
            let y = s.b[0] * *x + s1;
            s1 = s.b[1] * *x - s.a[0] * y + s2;
            s2 = s.b[2] * *x - s.a[1] * y;
            *x = y;
        }
    }
    Ok(AudioClip {
        samples,
        sample_rate_hz: clip.sample_rate_hz,
    })
}

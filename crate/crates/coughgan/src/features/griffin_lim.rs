//! Spectrogram inversion for audible inspection.
//!
//! The mel power matrix is lifted back to a linear power spectrogram by
//! projected-gradient non-negative least squares against the filterbank, then
//! the waveform is recovered by Griffin-Lim alternating projections with a
//! fixed zero-phase initialization, so the whole path is deterministic.

use rustfft::num_complex::Complex64;

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};

use super::mel::{mel_filterbank, MelSpectrogram};
use super::stft::{istft, stft, StftMatrix};

const NNLS_ITERATIONS: usize = 300;

/// Largest eigenvalue of MᵀM by power iteration; sets the NNLS step size.
fn largest_eigenvalue(bank: &[f64], n_mels: usize, bins: usize) -> f64 {
    let mut v = vec![1.0 / (bins as f64).sqrt(); bins];
    let mut lambda = 1.0;
    for _ in 0..30 {
        // w = Mᵀ (M v)
        let mut mv = vec![0.0; n_mels];
        for (m, out) in mv.iter_mut().enumerate() {
            *out = bank[m * bins..(m + 1) * bins]
                .iter()
                .zip(&v)
                .map(|(a, b)| a * b)
                .sum();
        }
        let mut w = vec![0.0; bins];
        for m in 0..n_mels {
            let s = mv[m];
            for (k, wk) in w.iter_mut().enumerate() {
                *wk += bank[m * bins + k] * s;
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 1.0;
        }
        lambda = norm;
        for (vk, wk) in v.iter_mut().zip(&w) {
            *vk = wk / norm;
        }
    }
    lambda
}

/// Non-negative least squares: finds x >= 0 minimizing ||M x - s||² per
/// frame, by projected gradient descent from the adjoint initialization.
fn nnls_linear_power(
    bank: &[f64],
    n_mels: usize,
    bins: usize,
    mel_power: &[f64],
    frames: usize,
) -> Vec<f64> {
    let lambda = largest_eigenvalue(bank, n_mels, bins);
    let step = 1.0 / lambda;
    // x = Mᵀ s as the starting point (non-negative by construction)
    let mut x = vec![0.0; bins * frames];
    for m in 0..n_mels {
        for k in 0..bins {
            let w = bank[m * bins + k];
            if w == 0.0 {
                continue;
            }
            for t in 0..frames {
                x[k * frames + t] += w * mel_power[m * frames + t];
            }
        }
    }
    let mut residual = vec![0.0; n_mels * frames];
    let mut grad = vec![0.0; bins * frames];
    for _ in 0..NNLS_ITERATIONS {
        // residual = M x - s
        residual.copy_from_slice(mel_power);
        for r in residual.iter_mut() {
            *r = -*r;
        }
        for m in 0..n_mels {
            for k in 0..bins {
                let w = bank[m * bins + k];
                if w == 0.0 {
                    continue;
                }
                for t in 0..frames {
                    residual[m * frames + t] += w * x[k * frames + t];
                }
            }
        }
        // grad = Mᵀ residual
        grad.fill(0.0);
        for m in 0..n_mels {
            for k in 0..bins {
                let w = bank[m * bins + k];
                if w == 0.0 {
                    continue;
                }
                for t in 0..frames {
                    grad[k * frames + t] += w * residual[m * frames + t];
                }
            }
        }
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi = (*xi - step * gi).max(0.0);
        }
    }
    x
}

/// Inverts a dB mel spectrogram to a 12 kHz clip of canonical length.
pub fn griffin_lim(spec: &MelSpectrogram, iterations: usize) -> Result<AudioClip> {
    Ok(griffin_lim_with_residuals(spec, iterations)?.0)
}

/// Same as [`griffin_lim`] but also returns the per-iteration spectral
/// convergence residual ||(|STFT(x)| - S)|| / ||S||, which is non-increasing.
pub fn griffin_lim_with_residuals(
    spec: &MelSpectrogram,
    iterations: usize,
) -> Result<(AudioClip, Vec<f64>)> {
    if iterations == 0 {
        return Err(Error::Domain("griffin_lim needs at least 1 iteration".into()));
    }
    let cfg = &spec.config;
    cfg.validate()?;
    let bins = cfg.bins();
    let frames = cfg.n_frames;
    let out_len = cfg.canonical_len();

    // dB (referenced to max = 0 dB) back to power
    let mel_power: Vec<f64> = spec.values.iter().map(|&db| 10f64.powf(db / 10.0)).collect();
    let bank = mel_filterbank(cfg)?;
    let linear_power = nnls_linear_power(&bank, cfg.n_mels, bins, &mel_power, frames);
    let target_mag: Vec<f64> = linear_power.iter().map(|&p| p.sqrt()).collect();
    let target_norm = target_mag.iter().map(|m| m * m).sum::<f64>().sqrt();

    // zero-phase initialization: spectrum = magnitudes, purely real
    let mut estimate = StftMatrix::zeros(cfg.n_fft, cfg.hop, frames);
    for k in 0..bins {
        for t in 0..frames {
            *estimate.at_mut(k, t) = Complex64::new(target_mag[k * frames + t], 0.0);
        }
    }

    let mut residuals = Vec::with_capacity(iterations);
    let mut audio = istft(&estimate, out_len);
    for _ in 0..iterations {
        let rebuilt = stft(&audio, cfg.n_fft, cfg.hop)?;
        // spectral convergence against the target magnitudes
        let mut err = 0.0;
        for k in 0..bins {
            for t in 0..frames {
                let d = rebuilt.at(k, t).norm() - target_mag[k * frames + t];
                err += d * d;
            }
        }
        residuals.push(if target_norm > 0.0 {
            err.sqrt() / target_norm
        } else {
            0.0
        });
        // keep the target magnitudes, adopt the rebuilt phases
        for k in 0..bins {
            for t in 0..frames {
                let z = rebuilt.at(k, t);
                let mag = z.norm();
                let phase = if mag > 0.0 {
                    z / mag
                } else {
                    Complex64::new(1.0, 0.0)
                };
                *estimate.at_mut(k, t) = phase * target_mag[k * frames + t];
            }
        }
        audio = istft(&estimate, out_len);
    }

    let clip = AudioClip {
        samples: audio,
        sample_rate_hz: cfg.sample_rate_hz,
    };
    Ok((clip, residuals))
}

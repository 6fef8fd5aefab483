//! Kaiser-windowed sinc polyphase resampling.

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};

/// Zero crossings of the sinc prototype on each side (at the lower rate).
const SINC_ZERO_CROSSINGS: usize = 32;
/// Kaiser shape parameter; ~85 dB stopband attenuation.
const KAISER_BETA: f64 = 8.555;

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half_sq = x * x / 4.0;
    for k in 1..=30 {
        term *= half_sq / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Resamples to `target_rate_hz`. Output length is
/// `round(len * target / source)`; equal rates return the clip unchanged.
pub fn resample(clip: &AudioClip, target_rate_hz: u32) -> Result<AudioClip> {
    if target_rate_hz == 0 {
        return Err(Error::Domain("target rate must be positive".into()));
    }
    let source = clip.sample_rate_hz;
    if source == target_rate_hz {
        return Ok(clip.clone());
    }
    let g = gcd(source, target_rate_hz);
    let up = (target_rate_hz / g) as i64; // L
    let down = (source / g) as i64; // M
    let slow = up.max(down);

    // Prototype low-pass at the upsampled rate (source * L): cutoff pi/slow,
    // gain L to compensate the zero insertion.
    let half_width = (SINC_ZERO_CROSSINGS as i64) * slow;
    let mut taps = vec![0.0; (2 * half_width + 1) as usize];
    for (i, tap) in taps.iter_mut().enumerate() {
        let n = i as i64 - half_width;
        let t = n as f64 / slow as f64;
        let window_arg = n as f64 / half_width as f64;
        let window = bessel_i0(KAISER_BETA * (1.0 - window_arg * window_arg).max(0.0).sqrt())
            / bessel_i0(KAISER_BETA);
        *tap = (up as f64 / slow as f64) * sinc(t) * window;
    }

    let in_len = clip.samples.len() as i64;
    let out_len =
        (clip.samples.len() as f64 * f64::from(target_rate_hz) / f64::from(source)).round() as usize;
    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len as i64 {
        // output j sits at position j*down on the upsampled grid
        let u = j * down;
        let n_lo = ((u - half_width) + up - 1).div_euclid(up); // ceil
        let n_hi = (u + half_width).div_euclid(up); // floor
        let mut acc = 0.0;
        for n in n_lo.max(0)..=n_hi.min(in_len - 1) {
            let tap_idx = (u - n * up + half_width) as usize;
            acc += clip.samples[n as usize] * taps[tap_idx];
        }
        out.push(acc);
    }
    Ok(AudioClip {
        samples: out,
        sample_rate_hz: target_rate_hz,
    })
}

//! Centered short-time Fourier transform and its inverse.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

use super::fft::Fft;

/// Periodic Hann window: w[i] = 0.5 - 0.5 cos(2 pi i / n).
pub fn hann_window_periodic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
        .collect()
}

/// Complex STFT matrix, bin-major: `bins x frames` with bins = n_fft/2 + 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StftMatrix {
    pub n_fft: usize,
    pub hop: usize,
    pub bins: usize,
    pub frames: usize,
    data: Vec<Complex64>,
}

impl StftMatrix {
    pub fn zeros(n_fft: usize, hop: usize, frames: usize) -> Self {
        let bins = n_fft / 2 + 1;
        StftMatrix {
            n_fft,
            hop,
            bins,
            frames,
            data: vec![Complex64::new(0.0, 0.0); bins * frames],
        }
    }

    pub fn at(&self, bin: usize, frame: usize) -> Complex64 {
        self.data[bin * self.frames + frame]
    }

    pub fn at_mut(&mut self, bin: usize, frame: usize) -> &mut Complex64 {
        &mut self.data[bin * self.frames + frame]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.data.iter().map(|c| c.norm()).collect()
    }
}

/// Reflection without edge duplication, bouncing as often as needed.
fn reflect_index(i: isize, n: usize) -> usize {
    debug_assert!(n >= 1);
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut r = i.rem_euclid(period);
    if r >= n as isize {
        r = period - r;
    }
    r as usize
}

/// Centered transform: the input is reflect-padded by n_fft/2 on each side,
/// giving 1 + floor(len/hop) frames of n_fft/2 + 1 bins each.
pub fn stft(samples: &[f64], n_fft: usize, hop: usize) -> Result<StftMatrix> {
    if samples.is_empty() {
        return Err(Error::Domain("stft of an empty signal".into()));
    }
    if n_fft < 2 || hop == 0 {
        return Err(Error::Domain(format!(
            "invalid stft parameters n_fft={n_fft}, hop={hop}"
        )));
    }
    let frames = 1 + samples.len() / hop;
    let pad = n_fft / 2;
    let window = hann_window_periodic(n_fft);
    let fft = Fft::new(n_fft);
    let mut out = StftMatrix::zeros(n_fft, hop, frames);
    let mut frame_buf = vec![0.0; n_fft];
    for t in 0..frames {
        for (i, f) in frame_buf.iter_mut().enumerate() {
            let src = (t * hop + i) as isize - pad as isize;
            let idx = reflect_index(src, samples.len());
            *f = samples[idx] * window[i];
        }
        let spectrum = fft.forward_real(&frame_buf);
        for (bin, &value) in spectrum.iter().take(out.bins).enumerate() {
            *out.at_mut(bin, t) = value;
        }
    }
    Ok(out)
}

/// Inverse of [`stft`] via windowed overlap-add with squared-window
/// normalization; returns exactly `out_len` samples.
pub fn istft(matrix: &StftMatrix, out_len: usize) -> Vec<f64> {
    let n_fft = matrix.n_fft;
    let hop = matrix.hop;
    let pad = n_fft / 2;
    let window = hann_window_periodic(n_fft);
    let fft = Fft::new(n_fft);
    let padded_len = (matrix.frames - 1) * hop + n_fft;
    let mut acc = vec![0.0; padded_len];
    let mut norm = vec![0.0; padded_len];
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n_fft];
    for t in 0..matrix.frames {
        for bin in 0..matrix.bins {
            spectrum[bin] = matrix.at(bin, t);
        }
        // rebuild the upper half by Hermitian symmetry
        for bin in matrix.bins..n_fft {
            spectrum[bin] = matrix.at(n_fft - bin, t).conj();
        }
        let frame = fft.inverse_real(&spectrum);
        let base = t * hop;
        for i in 0..n_fft {
            acc[base + i] += frame[i] * window[i];
            norm[base + i] += window[i] * window[i];
        }
    }
    (0..out_len)
        .map(|i| {
            let j = i + pad;
            if j < padded_len && norm[j] > 1e-10 {
                acc[j] / norm[j]
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn frame_count_formula() {
        let samples = vec![0.1; 11776];
        let m = stft(&samples, 2048, 512).unwrap();
        assert_eq!(m.bins, 1025);
        assert_eq!(m.frames, 24);
    }

    #[test]
    fn zero_input_gives_zero_matrix() {
        let m = stft(&vec![0.0; 4096], 2048, 512).unwrap();
        assert!(m.magnitudes().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sine_peak_lands_in_the_expected_bin() {
        // brute-force oracle: bin = round(f * n_fft / fs) = round(1500*2048/12000) = 256
        let samples: Vec<f64> = (0..11776)
            .map(|i| (std::f64::consts::TAU * 1500.0 * i as f64 / 12000.0).sin())
            .collect();
        let m = stft(&samples, 2048, 512).unwrap();
        for t in 2..m.frames - 2 {
            let mut best = 0;
            let mut best_mag = 0.0;
            for bin in 0..m.bins {
                let mag = m.at(bin, t).norm();
                if mag > best_mag {
                    best_mag = mag;
                    best = bin;
                }
            }
            assert_eq!(best, 256, "frame {t}");
        }
    }

    #[test]
    fn hop_shift_moves_the_matrix_one_frame() {
        let mut rng = Rng::seed_from_u64(21);
        let n = 8192;
        let hop = 512;
        let x: Vec<f64> = (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let shifted: Vec<f64> = x[hop..].to_vec();
        let a = stft(&x, 2048, hop).unwrap();
        let b = stft(&shifted, 2048, hop).unwrap();
        // interior frames only; edge frames see the reflection padding
        for t in 3..b.frames - 4 {
            for bin in 0..a.bins {
                let diff = (a.at(bin, t + 1) - b.at(bin, t)).norm();
                assert!(diff < 1e-9, "bin {bin} frame {t}: {diff}");
            }
        }
    }

    #[test]
    fn istft_inverts_stft_away_from_the_edges() {
        let mut rng = Rng::seed_from_u64(22);
        let n = 6000;
        let x: Vec<f64> = (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let m = stft(&x, 2048, 512).unwrap();
        let y = istft(&m, n);
        assert_eq!(y.len(), n);
        for i in 1024..n - 1024 {
            assert!((x[i] - y[i]).abs() < 1e-9, "sample {i}");
        }
    }

    #[test]
    fn reflect_index_bounces() {
        assert_eq!(reflect_index(-1, 10), 1);
        assert_eq!(reflect_index(-2, 10), 2);
        assert_eq!(reflect_index(10, 10), 8);
        assert_eq!(reflect_index(0, 10), 0);
        assert_eq!(reflect_index(9, 10), 9);
        // multi-bounce
        assert_eq!(reflect_index(-10, 4), 2);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(stft(&[], 2048, 512).is_err());
    }
}

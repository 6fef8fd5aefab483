//! FFT wrapper (forward/inverse complex transforms of a fixed size).

use rustfft::num_complex::Complex64;
use rustfft::{Fft as RustFft, FftPlanner};
use std::sync::Arc;

/// Forward/inverse transforms planned once for a given size.
pub struct Fft {
    size: usize,
    forward: Arc<dyn RustFft<f64>>,
    inverse: Arc<dyn RustFft<f64>>,
}

impl Fft {
    pub fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft {
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Unnormalized DFT of a real frame; returns all `size` bins.
    pub fn forward_real(&self, frame: &[f64]) -> Vec<Complex64> {
        assert_eq!(frame.len(), self.size);
        let mut buf: Vec<Complex64> = frame.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse DFT scaled by 1/N; returns the real part.
    pub fn inverse_real(&self, spectrum: &[Complex64]) -> Vec<f64> {
        assert_eq!(spectrum.len(), self.size);
        let mut buf = spectrum.to_vec();
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.size as f64;
        buf.into_iter().map(|c| c.re * scale).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn parseval_holds_on_random_frames() {
        let fft = Fft::new(2048);
        let mut rng = Rng::seed_from_u64(11);
        for _ in 0..5 {
            let frame: Vec<f64> = (0..2048).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let spectrum = fft.forward_real(&frame);
            let time_energy: f64 = frame.iter().map(|x| x * x).sum();
            let freq_energy: f64 =
                spectrum.iter().map(|c| c.norm_sqr()).sum::<f64>() / 2048.0;
            let rel = (time_energy - freq_energy).abs() / time_energy;
            assert!(rel < 1e-9, "Parseval relative error {rel}");
        }
    }

    #[test]
    fn round_trip_recovers_signal() {
        let fft = Fft::new(256);
        let mut rng = Rng::seed_from_u64(13);
        let frame: Vec<f64> = (0..256).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let back = fft.inverse_real(&fft.forward_real(&frame));
        for (a, b) in frame.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_naive_dft_on_small_input() {
        let fft = Fft::new(16);
        let frame: Vec<f64> = (0..16).map(|i| (i as f64 * 0.7).sin()).collect();
        let fast = fft.forward_real(&frame);
        for k in 0..16 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, &x) in frame.iter().enumerate() {
                let phase = -std::f64::consts::TAU * k as f64 * n as f64 / 16.0;
                acc += Complex64::new(x * phase.cos(), x * phase.sin());
            }
            assert!((fast[k] - acc).norm() < 1e-10);
        }
    }
}

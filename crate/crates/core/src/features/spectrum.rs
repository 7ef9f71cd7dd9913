//! One-sided amplitude spectra via an iterative radix-2 FFT.

use std::f64::consts::PI;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use super::TimeSeriesWindow;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    #[default]
    None,
    Hann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies_hz: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Zero-padded transform length.
    pub n_fft: usize,
}

impl Spectrum {
    pub fn resolution_hz(&self) -> f64 {
        if self.frequencies_hz.len() < 2 {
            0.0
        } else {
            self.frequencies_hz[1] - self.frequencies_hz[0]
        }
    }

    pub fn max_frequency(&self) -> f64 {
        self.frequencies_hz.last().copied().unwrap_or(0.0)
    }
}

/// In-place iterative Cooley-Tukey FFT. `buf.len()` must be a power of two.
pub(crate) fn fft_in_place(buf: &mut [Complex<f64>]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    if n <= 1 {
        return;
    }

    // bit reversal
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }

    // twiddles for the full length; stage `len` uses every (n/len)-th entry
    let twiddles: Vec<Complex<f64>> = (0..n / 2)
        .map(|k| {
            let theta = -2.0 * PI * k as f64 / n as f64;
            Complex::new(theta.cos(), theta.sin())
        })
        .collect();

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

fn taper_weights(taper: Taper, n: usize) -> Vec<f64> {
    match taper {
        Taper::None => vec![1.0; n],
        Taper::Hann if n == 1 => vec![1.0],
        Taper::Hann => (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
            .collect(),
    }
}

/// One-sided amplitude spectrum. A sinusoid of amplitude `A` sitting exactly
/// on a bin reads as `A`; DC and Nyquist are scaled by `1/N` instead of `2/N`.
/// With a taper the coherent gain (sum of weights) replaces `N`.
pub fn spectrum(window: &TimeSeriesWindow, taper: Taper) -> Spectrum {
    let x = window.samples();
    let n_fft = x.len().next_power_of_two();
    let weights = taper_weights(taper, x.len());
    let gain: f64 = weights.iter().sum();

    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    for (slot, (&v, &w)) in buf.iter_mut().zip(x.iter().zip(&weights)) {
        *slot = Complex::new(v * w, 0.0);
    }
    fft_in_place(&mut buf);

    let half = n_fft / 2;
    let df = window.sampling_rate_hz() / n_fft as f64;
    let mut frequencies_hz = Vec::with_capacity(half + 1);
    let mut amplitudes = Vec::with_capacity(half + 1);
    for (k, c) in buf.iter().take(half + 1).enumerate() {
        let scale = if k == 0 || k == half { 1.0 } else { 2.0 };
        frequencies_hz.push(k as f64 * df);
        amplitudes.push(scale * c.norm() / gain);
    }
    Spectrum { frequencies_hz, amplitudes, n_fft }
}

/// Maximum amplitude among the bins inside `[center - halfwidth, center + halfwidth]`.
pub fn band_amplitude(spec: &Spectrum, center_hz: f64, halfwidth_hz: f64) -> Result<f64> {
    let lo = center_hz - halfwidth_hz;
    let hi = center_hz + halfwidth_hz;
    if !(lo.is_finite() && hi.is_finite()) || halfwidth_hz < 0.0 {
        return Err(Error::invalid("band edges must be finite with non-negative halfwidth"));
    }
    let slack = 1e-9 * spec.resolution_hz().max(f64::MIN_POSITIVE);
    if lo < -slack || hi > spec.max_frequency() + slack {
        return Err(Error::invalid(format!(
            "band {lo}..{hi} Hz outside 0..{} Hz",
            spec.max_frequency()
        )));
    }
    spec.frequencies_hz
        .iter()
        .zip(&spec.amplitudes)
        .filter(|(&f, _)| f >= lo - slack && f <= hi + slack)
        .map(|(_, &a)| a)
        .reduce(f64::max)
        .ok_or(Error::EmptyBand { center_hz, halfwidth_hz })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(samples: Vec<f64>, fs: f64) -> TimeSeriesWindow {
        TimeSeriesWindow::new(samples, fs, "x", 0).unwrap()
    }

    /// Direct O(N^2) DFT magnitude at bin k.
    fn dft_abs(x: &[f64], n: usize, k: usize) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (t, &v) in x.iter().enumerate() {
            let th = -2.0 * PI * (k * t % n) as f64 / n as f64;
            re += v * th.cos();
            im += v * th.sin();
        }
        (re * re + im * im).sqrt()
    }

    fn tone(freq: f64, amp: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / fs).sin()).collect()
    }

    #[test]
    fn bin_aligned_sinusoid_reads_its_amplitude() {
        let spec = spectrum(&window(tone(64.0, 1.0, 2048.0, 2048), 2048.0), Taper::None);
        assert_eq!(spec.n_fft, 2048);
        assert!((spec.resolution_hz() - 1.0).abs() < 1e-15);
        for (f, a) in spec.frequencies_hz.iter().zip(&spec.amplitudes) {
            if *f == 64.0 {
                assert!((a - 1.0).abs() < 1e-9, "{a}");
            } else {
                assert!(*a < 1e-9, "leak {a} at {f}");
            }
        }
        assert!((band_amplitude(&spec, 64.0, 2.0).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_and_constant_signals() {
        let spec = spectrum(&window(vec![0.0; 64], 64.0), Taper::None);
        assert!(spec.amplitudes.iter().all(|&a| a == 0.0));
        assert_eq!(band_amplitude(&spec, 10.0, 2.0).unwrap(), 0.0);

        let spec = spectrum(&window(vec![0.5; 64], 64.0), Taper::None);
        assert!((spec.amplitudes[0] - 0.5).abs() < 1e-15);
        assert!(spec.amplitudes[1..].iter().all(|&a| a < 1e-15));
    }

    #[test]
    fn hann_taper_keeps_coherent_amplitude() {
        let spec = spectrum(&window(tone(64.0, 1.0, 2048.0, 2048), 2048.0), Taper::Hann);
        let peak = band_amplitude(&spec, 64.0, 2.0).unwrap();
        assert!((peak - 1.0).abs() < 1e-3, "{peak}");
    }

    #[test]
    fn two_tones_against_direct_dft() {
        let fs = 2048.0;
        let n = 2048;
        let x: Vec<f64> = tone(26.0, 2.0, fs, n)
            .iter()
            .zip(tone(52.0, 1.0, fs, n))
            .map(|(a, b)| a + b)
            .collect();
        let spec = spectrum(&window(x.clone(), fs), Taper::None);
        // oracle: max over bins 25..=27 of 2|X_k|/N
        let oracle = (25..=27).map(|k| 2.0 * dft_abs(&x, n, k) / n as f64).fold(0.0, f64::max);
        let got = band_amplitude(&spec, 26.1, 1.5).unwrap();
        assert!((got - oracle).abs() < 1e-9);
        assert!((got - 2.0).abs() < 1e-6);
        assert!((band_amplitude(&spec, 52.0, 0.5).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn padding_to_power_of_two() {
        let spec = spectrum(&window(vec![1.0; 1000], 1000.0), Taper::None);
        assert_eq!(spec.n_fft, 1024);
        assert_eq!(spec.amplitudes.len(), 513);
        assert!(spec.max_frequency() <= 500.0);
    }

    #[test]
    fn band_errors() {
        let spec = spectrum(&window(vec![1.0; 16], 16.0), Taper::None);
        assert!(matches!(band_amplitude(&spec, 2.3, 0.1), Err(Error::EmptyBand { .. })));
        assert!(band_amplitude(&spec, 1.0, 2.0).is_err());
        assert!(band_amplitude(&spec, 8.0, 1.0).is_err());
    }

    #[test]
    fn parseval_against_direct_dft() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(11, 0);
        for case in 0..100 {
            let n = 8 + (case * 7) % 120;
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let spec = spectrum(&window(x.clone(), 100.0), Taper::None);
            let nf = spec.n_fft;
            let half = nf / 2;
            // fold the one-sided amplitudes back to |X_k|^2 and sum over the full circle
            let folded: f64 = spec
                .amplitudes
                .iter()
                .enumerate()
                .map(|(k, &a)| {
                    if k == 0 || k == half {
                        (a * n as f64).powi(2)
                    } else {
                        2.0 * (a * n as f64 / 2.0).powi(2)
                    }
                })
                .sum();
            let power: f64 = x.iter().map(|v| v * v).sum();
            assert!((folded / nf as f64 - power).abs() <= 1e-6 * power);
            // and each bin against the direct transform
            for k in [0, 1, half / 2, half] {
                let direct = dft_abs(&x, nf, k);
                let scale = if k == 0 || k == half { 1.0 } else { 2.0 };
                assert!((spec.amplitudes[k] - scale * direct / n as f64).abs() < 1e-10);
            }
        }
    }
}

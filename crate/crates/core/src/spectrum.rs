//! One-sided magnitude spectra on top of `rustfft`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Reusable forward FFT of a fixed length returning unnormalised one-sided
/// magnitudes (`len/2 + 1` bins, DC first).
pub struct MagnitudeSpectrum {
    fft: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl MagnitudeSpectrum {
    pub fn new(len: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(len);
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        MagnitudeSpectrum {
            fft,
            buffer: vec![Complex::default(); len],
            scratch,
        }
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn bins(&self) -> usize {
        self.len() / 2 + 1
    }

    /// Writes the one-sided magnitudes of `frame` into `out`.
    pub fn compute_into(&mut self, frame: &[f64], out: &mut Vec<f64>) {
        assert_eq!(frame.len(), self.len(), "frame length does not match FFT size");
        for (dst, &x) in self.buffer.iter_mut().zip(frame) {
            *dst = Complex::new(x, 0.0);
        }
        self.fft
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        out.clear();
        out.extend(self.buffer[..self.bins()].iter().map(|c| c.norm()));
    }

    pub fn compute(&mut self, frame: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.bins());
        self.compute_into(frame, &mut out);
        out
    }
}

/// One-sided magnitude spectrum of `samples`.
pub fn magnitude_spectrum(samples: &[f64]) -> Vec<f64> {
    MagnitudeSpectrum::new(samples.len()).compute(samples)
}

/// Frequency (Hz) of the largest one-sided FFT bin.
pub fn peak_frequency(samples: &[f64], rate: f64) -> f64 {
    let mags = magnitude_spectrum(samples);
    let (bin, _) = mags
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, &m)| if m > best.1 { (i, m) } else { best });
    bin as f64 * rate / samples.len() as f64
}

/// Magnitude of the bin nearest `freq`.
pub fn magnitude_at(samples: &[f64], rate: f64, freq: f64) -> f64 {
    let mags = magnitude_spectrum(samples);
    let bin = (freq * samples.len() as f64 / rate).round() as usize;
    mags[bin.min(mags.len() - 1)]
}

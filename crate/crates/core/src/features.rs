//! Windowed per-frame statistics and spectra, concatenated into
//! fixed-length vectors for the classifier.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dtmf::ToneId;
use crate::error::{Error, Result};
use crate::sensor_sim::{Axis, Recording};
use crate::spectrum::MagnitudeSpectrum;

/// Names of the scalar statistics, in emission order. The one-sided FFT
/// magnitudes follow them in every frame's feature block.
pub const FEATURE_NAMES: [&str; 18] = [
    "mean",
    "median",
    "kurtosis",
    "abs_area",
    "mean_crossings",
    "min",
    "variance",
    "power",
    "std",
    "iqr",
    "range",
    "max",
    "variation",
    "spectral_entropy",
    "skew",
    "q1",
    "q2",
    "q3",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowingParams {
    pub frame_size: usize,
    pub frame_step: usize,
}

impl Default for WindowingParams {
    fn default() -> Self {
        WindowingParams {
            frame_size: 50,
            frame_step: 5,
        }
    }
}

impl WindowingParams {
    pub fn new(frame_size: usize, frame_step: usize) -> Result<Self> {
        let p = WindowingParams {
            frame_size,
            frame_step,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_size < 2 {
            return Err(Error::invalid("frame size must be at least 2"));
        }
        if self.frame_step < 1 || self.frame_step > self.frame_size {
            return Err(Error::invalid(format!(
                "frame step must lie in [1, {}], got {}",
                self.frame_size, self.frame_step
            )));
        }
        Ok(())
    }

    /// Number of whole frames in `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.frame_size {
            0
        } else {
            (len - self.frame_size) / self.frame_step + 1
        }
    }

    pub fn features_per_frame(&self) -> usize {
        FEATURE_NAMES.len() + self.frame_size / 2 + 1
    }

    /// Unpadded vector length for `len`-sample recordings over `n_axes` axes.
    pub fn natural_len(&self, len: usize, n_axes: usize) -> usize {
        n_axes * self.frame_count(len) * self.features_per_frame()
    }
}

/// Frames of each selected axis; `frames[a][i]` covers samples
/// `[i·step, i·step + size)` of `axes[a]`.
pub fn align_and_window<'a>(
    rec: &'a Recording,
    axes: &[Axis],
    params: &WindowingParams,
) -> Result<Vec<Vec<&'a [f64]>>> {
    params.validate()?;
    if rec.len() < params.frame_size {
        return Err(Error::TooShort {
            samples: rec.len(),
            frame_size: params.frame_size,
        });
    }
    let count = params.frame_count(rec.len());
    Ok(axes
        .iter()
        .map(|&a| {
            let x = rec.axis(a).samples();
            (0..count)
                .map(|i| &x[i * params.frame_step..i * params.frame_step + params.frame_size])
                .collect()
        })
        .collect())
}

/// Linear interpolation between order statistics of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-frame feature computer with a cached FFT plan.
pub struct FrameFeaturizer {
    rate: f64,
    fft: MagnitudeSpectrum,
    sorted: Vec<f64>,
    mags: Vec<f64>,
}

impl FrameFeaturizer {
    pub fn new(frame_size: usize, rate: f64) -> Self {
        FrameFeaturizer {
            rate,
            fft: MagnitudeSpectrum::new(frame_size),
            sorted: Vec::with_capacity(frame_size),
            mags: Vec::with_capacity(frame_size / 2 + 1),
        }
    }

    pub fn features_len(&self) -> usize {
        FEATURE_NAMES.len() + self.fft.bins()
    }

    /// Appends the frame's features to `out`.
    pub fn push_features(&mut self, frame: &[f64], out: &mut Vec<f64>) {
        let n = frame.len() as f64;
        let mean = frame.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &x in frame {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        // Rounding in the mean leaves a tiny m2 on constant frames.
        let flat = m2 <= 1e-28 * mean * mean || m2 == 0.0;
        let (skew, kurt) = if flat {
            (0.0, 0.0)
        } else {
            (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
        };
        let std = m2.sqrt();

        self.sorted.clear();
        self.sorted.extend_from_slice(frame);
        self.sorted.sort_unstable_by(f64::total_cmp);
        let (q1, q2, q3) = (
            quantile(&self.sorted, 0.25),
            quantile(&self.sorted, 0.5),
            quantile(&self.sorted, 0.75),
        );
        let min = self.sorted[0];
        let max = self.sorted[self.sorted.len() - 1];

        let crossings = if flat {
            0
        } else {
            frame
                .windows(2)
                .filter(|w| (w[0] - mean) * (w[1] - mean) < 0.0)
                .count()
        };

        self.fft.compute_into(frame, &mut self.mags);
        let total: f64 = self.mags.iter().map(|m| m * m).sum();
        let entropy = if total > 0.0 {
            -self
                .mags
                .iter()
                .map(|m| m * m / total)
                .filter(|&p| p > 0.0)
                .map(|p| p * p.ln())
                .sum::<f64>()
        } else {
            0.0
        };

        out.extend_from_slice(&[
            mean,
            q2,
            kurt,
            frame.iter().map(|x| x.abs()).sum::<f64>() / self.rate,
            crossings as f64 / (n - 1.0),
            min,
            m2,
            frame.iter().map(|x| x * x).sum::<f64>() / n,
            std,
            q3 - q1,
            max - min,
            max,
            if mean.abs() < 1e-12 { 0.0 } else { std / mean.abs() },
            entropy,
            skew,
            q1,
            q2,
            q3,
        ]);
        out.extend_from_slice(&self.mags);
    }
}

/// Feature block of one frame sampled at `rate` Hz.
pub fn frame_features(frame: &[f64], rate: f64) -> Result<Vec<f64>> {
    if frame.len() < 2 {
        return Err(Error::invalid("frame must contain at least 2 samples"));
    }
    let mut f = FrameFeaturizer::new(frame.len(), rate);
    let mut out = Vec::with_capacity(f.features_len());
    f.push_features(frame, &mut out);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub axes: Vec<Axis>,
    pub windows: usize,
    pub features_per_window: usize,
}

impl FeatureLayout {
    pub fn natural_len(&self) -> usize {
        self.axes.len() * self.windows * self.features_per_window
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: FeatureLayout,
    pub label: Option<ToneId>,
}

/// Features of `axes` in (axis, window, feature) order, zero-padded to
/// `target_len`.
pub fn extract(
    rec: &Recording,
    axes: &[Axis],
    params: &WindowingParams,
    target_len: usize,
) -> Result<FeatureVector> {
    let frames = align_and_window(rec, axes, params)?;
    let mut f = FrameFeaturizer::new(params.frame_size, rec.rate());
    let layout = FeatureLayout {
        axes: axes.to_vec(),
        windows: params.frame_count(rec.len()),
        features_per_window: f.features_len(),
    };
    let natural = layout.natural_len();
    if natural > target_len {
        return Err(Error::Overlong {
            natural,
            target: target_len,
        });
    }
    let mut values = Vec::with_capacity(target_len);
    for frame in frames.iter().flatten() {
        f.push_features(frame, &mut values);
    }
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite feature at index {bad}")));
    }
    values.resize(target_len, 0.0);
    Ok(FeatureVector {
        values,
        layout,
        label: Some(rec.label),
    })
}

/// One row per vector, columns `f0..f{n-1}` then `label`.
pub fn feature_matrix_csv(vectors: &[FeatureVector]) -> Result<String> {
    let width = vectors.first().map_or(0, |v| v.values.len());
    if vectors.iter().any(|v| v.values.len() != width) {
        return Err(Error::invalid("feature vectors differ in length"));
    }
    let mut out = String::new();
    for j in 0..width {
        let _ = write!(out, "f{j},");
    }
    out.push_str("label\n");
    for v in vectors {
        for x in &v.values {
            let _ = write!(out, "{x},");
        }
        match v.label {
            Some(l) => {
                let _ = writeln!(out, "{l}");
            }
            None => out.push('\n'),
        }
    }
    Ok(out)
}

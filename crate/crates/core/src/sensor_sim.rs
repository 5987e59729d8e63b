//! Touchtone leakage into a 6-axis motion sensor.
//!
//! The channel is deliberately small: every spectral component of the tone
//! (fundamentals plus integer harmonics) is scaled by the axis gain at its
//! true, pre-sampling frequency, point-sampled at the sensor's actual rate and
//! corrupted with white Gaussian noise. Aliases, harmonics and aliases of
//! harmonics all fall out of the sampling step; none of them is injected.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dtmf::{synthesize_tone, Component, SinusoidSum, ToneId, ToneTable};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};
use crate::sampling::{DiscreteSignal, SamplingConfig};

/// Sensor axes in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Ax,
    Ay,
    Az,
    Gx,
    Gy,
    Gz,
}

impl Axis {
    pub const ALL: [Axis; 6] = [Axis::Ax, Axis::Ay, Axis::Az, Axis::Gx, Axis::Gy, Axis::Gz];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["ax", "ay", "az", "gx", "gy", "gz"][self.index()]
    }

    pub fn is_gyro(self) -> bool {
        self.index() >= 3
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::invalid(format!("unknown axis {s:?}")))
    }
}

/// Lorentzian resonance added on top of an axis' base curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub center: f64,
    pub peak_gain: f64,
    /// Full width at half maximum, Hz.
    pub width: f64,
}

impl Resonance {
    fn gain(&self, f: f64) -> f64 {
        let x = (f - self.center) / (self.width / 2.0);
        self.peak_gain / (1.0 + x * x)
    }
}

/// Frequency response of one axis: piecewise-linear base curve (clamped outside
/// its breakpoints) plus resonance peaks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisResponse {
    curve: Vec<(f64, f64)>,
    peaks: Vec<Resonance>,
}

impl AxisResponse {
    pub fn new(curve: Vec<(f64, f64)>, peaks: Vec<Resonance>) -> Result<Self> {
        if curve.is_empty() {
            return Err(Error::invalid("gain curve needs at least one breakpoint"));
        }
        if curve.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::invalid("gain curve breakpoints must be strictly increasing"));
        }
        if curve.iter().any(|&(f, g)| !(f >= 0.0) || !(g >= 0.0) || !g.is_finite()) {
            return Err(Error::invalid("gain curve must be non-negative"));
        }
        if peaks
            .iter()
            .any(|p| !(p.peak_gain >= 0.0) || !(p.width > 0.0) || !(p.center >= 0.0))
        {
            return Err(Error::invalid("resonances need non-negative gain and positive width"));
        }
        Ok(AxisResponse { curve, peaks })
    }

    pub fn flat(gain: f64) -> Self {
        AxisResponse {
            curve: vec![(0.0, gain)],
            peaks: Vec::new(),
        }
    }

    /// Linear gain at `f` Hz.
    pub fn gain(&self, f: f64) -> f64 {
        let base = match self.curve.iter().position(|&(x, _)| x > f) {
            Some(0) => self.curve[0].1,
            None => self.curve[self.curve.len() - 1].1,
            Some(i) => {
                let (x0, y0) = self.curve[i - 1];
                let (x1, y1) = self.curve[i];
                y0 + (y1 - y0) * (f - x0) / (x1 - x0)
            }
        };
        base + self.peaks.iter().map(|p| p.gain(f)).sum::<f64>()
    }

    pub fn peaks(&self) -> &[Resonance] {
        &self.peaks
    }
}

/// An integer harmonic of every tone component, relative to the fundamental.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub order: u32,
    pub relative_amplitude: f64,
}

pub fn default_harmonics() -> Vec<Harmonic> {
    vec![
        Harmonic {
            order: 2,
            relative_amplitude: 0.3,
        },
        Harmonic {
            order: 3,
            relative_amplitude: 0.1,
        },
    ]
}

/// Named channel presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Unit gain on every axis, light noise.
    Flat,
    /// Per-axis resonances so axes carry complementary information.
    Resonant,
    /// Resonant channel with heavy noise.
    Noisy,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Flat => "flat",
            Preset::Resonant => "resonant",
            Preset::Noisy => "noisy",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flat" => Ok(Preset::Flat),
            "resonant" => Ok(Preset::Resonant),
            "noisy" => Ok(Preset::Noisy),
            other => Err(Error::invalid(format!("unknown sensor preset {other:?}"))),
        }
    }
}

pub const FLAT_NOISE_STD: f64 = 0.01;
pub const RESONANT_NOISE_STD: f64 = 0.05;
pub const NOISY_NOISE_STD: f64 = 0.25;

/// Complete channel description for one simulated phone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub id: String,
    axes: Vec<AxisResponse>,
    noise_std: [f64; 6],
    harmonics: Vec<Harmonic>,
    sampling: SamplingConfig,
    pub seed: u64,
}

impl SensorModel {
    pub fn new(
        id: impl Into<String>,
        axes: Vec<AxisResponse>,
        noise_std: [f64; 6],
        harmonics: Vec<Harmonic>,
        sampling: SamplingConfig,
        seed: u64,
    ) -> Result<Self> {
        if axes.len() != 6 {
            return Err(Error::invalid(format!("sensor model needs 6 axes, got {}", axes.len())));
        }
        if noise_std.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::invalid("noise std must be non-negative"));
        }
        for h in &harmonics {
            if h.order < 2 {
                return Err(Error::invalid("harmonic order must be at least 2"));
            }
            if !(0.0..=1.0).contains(&h.relative_amplitude) {
                return Err(Error::invalid("harmonic relative amplitude must lie in [0, 1]"));
            }
        }
        Ok(SensorModel {
            id: id.into(),
            axes,
            noise_std,
            harmonics,
            sampling,
            seed,
        })
    }

    pub fn axis(&self, axis: Axis) -> &AxisResponse {
        &self.axes[axis.index()]
    }

    pub fn noise_std(&self) -> &[f64; 6] {
        &self.noise_std
    }

    pub fn harmonics(&self) -> &[Harmonic] {
        &self.harmonics
    }

    pub fn sampling(&self) -> &SamplingConfig {
        &self.sampling
    }

    pub fn with_sampling(mut self, sampling: SamplingConfig) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_noise(mut self, noise_std: [f64; 6]) -> Result<Self> {
        if noise_std.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::invalid("noise std must be non-negative"));
        }
        self.noise_std = noise_std;
        Ok(self)
    }

    pub fn with_harmonics(mut self, harmonics: Vec<Harmonic>) -> Self {
        self.harmonics = harmonics;
        self
    }
}

/// Builds a preset channel. Deterministic in `(profile, seed)`; sampling is
/// 400 Hz nominal and can be replaced with [`SensorModel::with_sampling`].
pub fn make_default_model(profile: Preset, seed: u64) -> Result<SensorModel> {
    let sampling = SamplingConfig::new(400.0)?;
    match profile {
        Preset::Flat => SensorModel::new(
            profile.name(),
            vec![AxisResponse::flat(1.0); 6],
            [FLAT_NOISE_STD; 6],
            default_harmonics(),
            sampling,
            seed,
        ),
        Preset::Resonant | Preset::Noisy => {
            let noise = if profile == Preset::Resonant {
                RESONANT_NOISE_STD
            } else {
                NOISY_NOISE_STD
            };
            SensorModel::new(
                profile.name(),
                resonant_axes(seed),
                [noise; 6],
                default_harmonics(),
                sampling,
                seed,
            )
        }
    }
}

fn resonant_axes(seed: u64) -> Vec<AxisResponse> {
    let dtmf = ToneTable::standard().all_frequencies();
    for attempt in 0u64.. {
        let mut rng = stream_rng(seed, attempt);
        let axes: Vec<AxisResponse> = Axis::ALL
            .iter()
            .map(|axis| {
                // Gyroscopes pick up linear vibration less readily.
                let scale = if axis.is_gyro() { 0.6 } else { 1.0 };
                let curve = vec![
                    (0.0, scale * rng.random_range(0.05..0.3)),
                    (2000.0, scale * rng.random_range(0.05..0.3)),
                ];
                let peaks = (0..rng.random_range(1..=3))
                    .map(|_| Resonance {
                        center: rng.random_range(50.0..2000.0),
                        peak_gain: scale * rng.random_range(0.5..2.0),
                        width: rng.random_range(60.0..300.0),
                    })
                    .collect();
                AxisResponse::new(curve, peaks).expect("generated response is valid")
            })
            .collect();
        let distinct = dtmf.iter().any(|&f| {
            let gains: Vec<f64> = axes.iter().map(|a| a.gain(f)).collect();
            let lo = gains.iter().copied().fold(f64::MAX, f64::min);
            let hi = gains.iter().copied().fold(f64::MIN, f64::max);
            hi >= 2.0 * lo
        });
        if distinct {
            return axes;
        }
    }
    unreachable!()
}

/// Provenance of a recording.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub model_id: String,
    pub seed: u64,
    pub duration: f64,
}

/// Six time-aligned axis signals with their tone label.
#[derive(Clone, Debug, PartialEq)]
pub struct Recording {
    pub label: ToneId,
    axes: Vec<DiscreteSignal>,
    pub meta: RecordingMeta,
}

impl Recording {
    pub fn new(label: ToneId, axes: Vec<DiscreteSignal>, meta: RecordingMeta) -> Result<Self> {
        if axes.len() != 6 {
            return Err(Error::invalid(format!("recording needs 6 axes, got {}", axes.len())));
        }
        let first = &axes[0];
        if axes.iter().any(|s| {
            s.len() != first.len() || s.rate() != first.rate() || s.start_time() != first.start_time()
        }) {
            return Err(Error::invalid("recording axes must share length, rate and start time"));
        }
        Ok(Recording { label, axes, meta })
    }

    pub fn axis(&self, axis: Axis) -> &DiscreteSignal {
        &self.axes[axis.index()]
    }

    pub fn axes(&self) -> &[DiscreteSignal] {
        &self.axes
    }

    pub fn rate(&self) -> f64 {
        self.axes[0].rate()
    }

    pub fn len(&self) -> usize {
        self.axes[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Applies `f` to every axis, keeping label and provenance.
    pub fn map_axes<F>(&self, mut f: F) -> Result<Recording>
    where
        F: FnMut(&DiscreteSignal) -> Result<DiscreteSignal>,
    {
        let axes = self.axes.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        Recording::new(self.label, axes, self.meta.clone())
    }
}

/// Fundamentals plus harmonics with the per-recording random phases applied;
/// axis gains are not included.
pub fn enriched_signal(tone: &SinusoidSum, model: &SensorModel, seed: u64) -> Result<SinusoidSum> {
    let mut phase_rng = stream_rng(seed, 0);
    let mut comps = Vec::with_capacity(tone.components().len() * (1 + model.harmonics.len()));
    for c in tone.components() {
        comps.push(*c);
        for h in &model.harmonics {
            comps.push(Component {
                frequency: c.frequency * h.order as f64,
                amplitude: c.amplitude * h.relative_amplitude,
                phase: c.phase,
            });
        }
    }
    for c in &mut comps {
        c.phase += phase_rng.random_range(0.0..TAU);
    }
    SinusoidSum::new(comps, tone.duration())
}

/// Number of samples a signal of `duration` seconds yields at `rate`.
pub fn sample_count(duration: f64, rate: f64) -> usize {
    (duration * rate + 1e-9).floor() as usize
}

/// Simulates the sensor's view of `tone` for one recording.
pub fn leak(label: ToneId, tone: &SinusoidSum, model: &SensorModel, seed: u64) -> Result<Recording> {
    let rate = model.sampling.actual_rate;
    let n = sample_count(tone.duration(), rate);
    if n == 0 {
        return Err(Error::invalid(format!(
            "{} s at {rate} Hz yields no samples",
            tone.duration()
        )));
    }
    let enriched = enriched_signal(tone, model, seed)?;
    let basis: Vec<Vec<f64>> = enriched
        .components()
        .iter()
        .map(|c| {
            (0..n)
                .map(|k| (TAU * c.frequency * (k as f64 / rate) + c.phase).sin())
                .collect()
        })
        .collect();

    let axes = Axis::ALL
        .iter()
        .map(|&axis| {
            let response = model.axis(axis);
            let amps: Vec<f64> = enriched
                .components()
                .iter()
                .map(|c| response.gain(c.frequency) * c.amplitude)
                .collect();
            let mut samples: Vec<f64> = (0..n)
                .map(|k| amps.iter().zip(&basis).map(|(a, b)| a * b[k]).sum())
                .collect();
            let std = model.noise_std[axis.index()];
            if std > 0.0 {
                let normal = Normal::new(0.0, std).map_err(|e| Error::invalid(e.to_string()))?;
                let mut rng = stream_rng(seed, 1 + axis.index() as u64);
                for s in &mut samples {
                    *s += normal.sample(&mut rng);
                }
            }
            DiscreteSignal::new(samples, rate, 0.0)
        })
        .collect::<Result<Vec<_>>>()?;

    Recording::new(
        label,
        axes,
        RecordingMeta {
            model_id: model.id.clone(),
            seed,
            duration: tone.duration(),
        },
    )
}

/// Labelled recordings with a stratified train/test split.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub recordings: Vec<Recording>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Dataset {
    pub fn new(recordings: Vec<Recording>, train: Vec<usize>, test: Vec<usize>) -> Result<Self> {
        let n = recordings.len();
        let mut seen = vec![false; n];
        for &i in train.iter().chain(&test) {
            if i >= n || seen[i] {
                return Err(Error::invalid("split indices must be unique and in range"));
            }
            seen[i] = true;
        }
        Ok(Dataset {
            recordings,
            train,
            test,
        })
    }

    pub fn labels(&self, indices: &[usize]) -> Vec<ToneId> {
        indices.iter().map(|&i| self.recordings[i].label).collect()
    }

    /// Applies `f` to every recording; the split is kept.
    pub fn try_map<F>(&self, f: F) -> Result<Dataset>
    where
        F: Fn(&Recording) -> Result<Recording> + Sync + Send,
    {
        let recordings = self
            .recordings
            .par_iter()
            .map(f)
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            recordings,
            train: self.train.clone(),
            test: self.test.clone(),
        })
    }
}

/// Number of held-out recordings per tone for the 80/20 protocol.
pub fn test_count(reps_per_tone: usize) -> usize {
    (reps_per_tone as f64 * 0.2).round() as usize
}

/// `16 × reps_per_tone` recordings in a seeded random order with a stratified
/// 80/20 split. Recording `i` is simulated with seed `derive_seed(master_seed, i)`.
pub fn generate_dataset(
    model: &SensorModel,
    reps_per_tone: usize,
    duration: f64,
    master_seed: u64,
) -> Result<Dataset> {
    if reps_per_tone < 1 {
        return Err(Error::invalid("need at least one repetition per tone"));
    }
    let mut order: Vec<ToneId> = ToneId::all()
        .flat_map(|t| std::iter::repeat_n(t, reps_per_tone))
        .collect();
    order.shuffle(&mut stream_rng(master_seed, u64::MAX));

    let recordings = order
        .par_iter()
        .enumerate()
        .map(|(i, &tone)| {
            let sig = synthesize_tone(tone, duration, 1.0)?;
            leak(tone, &sig, model, derive_seed(master_seed, i as u64))
        })
        .collect::<Result<Vec<_>>>()?;

    let n_test = test_count(reps_per_tone);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for tone in ToneId::all() {
        let mut idx: Vec<usize> = (0..order.len()).filter(|&i| order[i] == tone).collect();
        idx.shuffle(&mut stream_rng(master_seed, u64::MAX - 1 - tone.index() as u64));
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Dataset::new(recordings, train, test)
}

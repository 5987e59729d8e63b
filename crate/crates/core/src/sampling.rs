//! Aliasing arithmetic and the point-sampling primitive.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dtmf::SinusoidSum;
use crate::error::{Error, Result};

/// Largest tolerated relative mismatch between the nominal and measured rate.
pub const MAX_RATE_MISMATCH: f64 = 0.1;

/// A sensor's advertised rate and the rate it actually samples at.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub nominal_rate: f64,
    pub actual_rate: f64,
}

impl SamplingConfig {
    pub fn new(rate: f64) -> Result<Self> {
        Self::with_actual(rate, rate)
    }

    pub fn with_actual(nominal_rate: f64, actual_rate: f64) -> Result<Self> {
        if !(nominal_rate > 0.0) || !nominal_rate.is_finite() {
            return Err(Error::invalid(format!("nominal rate must be positive, got {nominal_rate}")));
        }
        if !(actual_rate > 0.0) || !actual_rate.is_finite() {
            return Err(Error::invalid(format!("actual rate must be positive, got {actual_rate}")));
        }
        if (actual_rate - nominal_rate).abs() / nominal_rate > MAX_RATE_MISMATCH {
            return Err(Error::invalid(format!(
                "actual rate {actual_rate} Hz deviates more than 10% from nominal {nominal_rate} Hz"
            )));
        }
        Ok(SamplingConfig {
            nominal_rate,
            actual_rate,
        })
    }

    pub fn nyquist(&self) -> f64 {
        self.actual_rate / 2.0
    }
}

/// Uniformly sampled real signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSignal {
    samples: Vec<f64>,
    rate: f64,
    start_time: f64,
}

impl DiscreteSignal {
    pub fn new(samples: Vec<f64>, rate: f64, start_time: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("signal must contain at least one sample"));
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::invalid(format!("sample rate must be positive, got {rate}")));
        }
        if !start_time.is_finite() {
            return Err(Error::invalid("start time must be finite"));
        }
        Ok(DiscreteSignal {
            samples,
            rate,
            start_time,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time stamp of sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.start_time + k as f64 / self.rate
    }

    /// Same time base, new sample values.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        DiscreteSignal::new(samples, self.rate, self.start_time)
    }

    /// CSV with a `# rate=<Hz>` comment line and `time,value` columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 24);
        let _ = writeln!(out, "# rate={} start={}", self.rate, self.start_time);
        out.push_str("time,value\n");
        for (k, v) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{},{}", self.time(k), v);
        }
        out
    }

    pub fn from_csv(text: &str, origin: &Path) -> Result<Self> {
        let mut rate = None;
        let mut start = 0.0;
        let mut samples = Vec::new();
        let mut saw_header = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                for (key, value) in comment.split_whitespace().filter_map(|kv| kv.split_once('=')) {
                    let parsed: f64 = value
                        .parse()
                        .map_err(|_| Error::data(origin, format!("bad {key} value {value:?}")))?;
                    match key {
                        "rate" => rate = Some(parsed),
                        "start" => start = parsed,
                        _ => {}
                    }
                }
                continue;
            }
            if !saw_header {
                if line != "time,value" {
                    return Err(Error::data(origin, format!("unexpected header {line:?}")));
                }
                saw_header = true;
                continue;
            }
            let value = line
                .split(',')
                .nth(1)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::data(origin, format!("bad row {line:?}")))?;
            samples.push(value);
        }
        let rate = rate.ok_or_else(|| Error::data(origin, "missing rate comment"))?;
        DiscreteSignal::new(samples, rate, start).map_err(|e| Error::data(origin, e.to_string()))
    }
}

/// Folds `f` into `[0, f_s/2]`: the alias `|m·f_s − f|` minimised over integer `m`.
pub fn alias_frequency(f: f64, sample_rate: f64) -> f64 {
    debug_assert!(f >= 0.0 && sample_rate > 0.0);
    let r = f.rem_euclid(sample_rate);
    if r > sample_rate / 2.0 {
        sample_rate - r
    } else {
        r
    }
}

/// Element-wise [`alias_frequency`], order preserving.
pub fn alias_set(freqs: &[f64], sample_rate: f64) -> Vec<f64> {
    freqs
        .iter()
        .map(|&f| alias_frequency(f, sample_rate))
        .collect()
}

/// Evaluates `sig` at `k / actual_rate` for `k in 0..n`. Whatever aliasing the
/// result shows comes from the point evaluation alone.
pub fn sample_signal(sig: &SinusoidSum, cfg: &SamplingConfig, n: usize) -> Result<DiscreteSignal> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let rate = cfg.actual_rate;
    let comps = sig.components();
    let samples = (0..n)
        .map(|k| {
            let t = k as f64 / rate;
            comps
                .iter()
                .map(|c| c.amplitude * (TAU * c.frequency * t + c.phase).sin())
                .sum()
        })
        .collect();
    DiscreteSignal::new(samples, rate, 0.0)
}

/// Keeps samples `0, n, 2n, …`; no prefiltering.
pub fn decimate(sig: &DiscreteSignal, factor: usize) -> Result<DiscreteSignal> {
    if factor < 1 {
        return Err(Error::invalid("decimation factor must be at least 1"));
    }
    let samples = sig.samples.iter().step_by(factor).copied().collect();
    DiscreteSignal::new(samples, sig.rate / factor as f64, sig.start_time)
}

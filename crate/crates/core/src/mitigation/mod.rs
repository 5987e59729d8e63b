//! The evaluated mitigations: sample-rate reduction, digital low-pass,
//! oversampled anti-aliasing and notch filtering, plus the sampling-rate
//! planner.

mod filter;
mod planner;

use serde::{Deserialize, Serialize};

pub use filter::{
    apply_filter, butterworth_lowpass, notch_bank, Biquad, FilterDesign, FilterKind, FilterSpec,
    MAX_BUTTERWORTH_ORDER,
};
pub use planner::{plan_sampling_rate, PlanRow, SamplingPlan};

use crate::dtmf::ToneTable;
use crate::error::{Error, Result};
use crate::sampling::{alias_set, decimate};
use crate::sensor_sim::Recording;

pub const DEFAULT_LOWPASS_ORDER: usize = 5;

/// Keeps every `factor`-th sample on each axis.
pub fn mitigate_downsample(rec: &Recording, factor: usize) -> Result<Recording> {
    if factor < 1 {
        return Err(Error::invalid("downsample factor must be at least 1"));
    }
    rec.map_axes(|s| decimate(s, factor))
}

/// Butterworth low-pass on each axis at the recording's own rate.
pub fn mitigate_lowpass(rec: &Recording, cutoff: f64, order: usize) -> Result<Recording> {
    let spec = butterworth_lowpass(order, cutoff, rec.rate())?;
    rec.map_axes(|s| apply_filter(&spec, s))
}

/// Integer decimation factor from `rate` down to `target_rate`.
fn integer_ratio(rate: f64, target_rate: f64) -> Result<usize> {
    if !(target_rate > 0.0) {
        return Err(Error::invalid(format!("target rate must be positive, got {target_rate}")));
    }
    let ratio = rate / target_rate;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio {
        return Err(Error::invalid(format!(
            "recording rate {rate} Hz is not an integer multiple of target {target_rate} Hz"
        )));
    }
    Ok(n as usize)
}

/// Low-pass at the oversampled rate, then decimate to `target_rate`.
pub fn mitigate_antialias(
    rec: &Recording,
    target_rate: f64,
    cutoff: f64,
    order: usize,
) -> Result<Recording> {
    let factor = integer_ratio(rec.rate(), target_rate)?;
    if cutoff > target_rate / 2.0 {
        return Err(Error::invalid(format!(
            "anti-aliasing cutoff {cutoff} Hz exceeds target Nyquist {} Hz",
            target_rate / 2.0
        )));
    }
    let spec = butterworth_lowpass(order, cutoff, rec.rate())?;
    rec.map_axes(|s| decimate(&apply_filter(&spec, s)?, factor))
}

/// Notch bank on each axis.
pub fn mitigate_notch(rec: &Recording, centers: &[f64], width: f64) -> Result<Recording> {
    let spec = notch_bank(centers, width, rec.rate())?;
    rec.map_axes(|s| apply_filter(&spec, s))
}

/// Notch centers at the aliases of the eight touchtone frequencies for a
/// sensor running at `rate`, dropping any whose band would not fit inside
/// `(0, rate/2)`.
pub fn dtmf_alias_centers(rate: f64, width: f64) -> Vec<f64> {
    let mut centers = alias_set(&ToneTable::standard().all_frequencies(), rate);
    centers.retain(|&c| c - width / 2.0 > 0.0 && c + width / 2.0 < rate / 2.0);
    centers
}

fn default_lowpass_order() -> usize {
    DEFAULT_LOWPASS_ORDER
}

/// One mitigation step as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MitigationConfig {
    None,
    Downsample {
        factor: usize,
    },
    Lowpass {
        cutoff: f64,
        #[serde(default = "default_lowpass_order")]
        order: usize,
    },
    Antialias {
        target_rate: f64,
        cutoff: f64,
        #[serde(default = "default_lowpass_order")]
        order: usize,
    },
    Notch {
        /// Defaults to [`dtmf_alias_centers`] at the recording rate.
        #[serde(default)]
        centers: Option<Vec<f64>>,
        width: f64,
    },
}

impl MitigationConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            MitigationConfig::None => "none",
            MitigationConfig::Downsample { .. } => "downsample",
            MitigationConfig::Lowpass { .. } => "lowpass",
            MitigationConfig::Antialias { .. } => "antialias",
            MitigationConfig::Notch { .. } => "notch",
        }
    }

    /// Rate-independent parameter checks.
    pub fn validate(&self) -> Result<()> {
        match *self {
            MitigationConfig::None => Ok(()),
            MitigationConfig::Downsample { factor } if factor < 1 => {
                Err(Error::invalid("downsample factor must be at least 1"))
            }
            MitigationConfig::Downsample { .. } => Ok(()),
            MitigationConfig::Lowpass { cutoff, order }
            | MitigationConfig::Antialias { cutoff, order, .. } => {
                if !(cutoff > 0.0) {
                    return Err(Error::invalid(format!("cutoff must be positive, got {cutoff}")));
                }
                if !(1..=MAX_BUTTERWORTH_ORDER).contains(&order) {
                    return Err(Error::invalid(format!("filter order {order} out of range")));
                }
                if let MitigationConfig::Antialias { target_rate, .. } = *self {
                    if !(target_rate > 0.0) || cutoff > target_rate / 2.0 {
                        return Err(Error::invalid(format!(
                            "anti-aliasing needs 0 < cutoff <= target_rate/2, got {cutoff} / {target_rate}"
                        )));
                    }
                }
                Ok(())
            }
            MitigationConfig::Notch { width, .. } if !(width > 0.0) => {
                Err(Error::invalid("notch width must be positive"))
            }
            MitigationConfig::Notch { .. } => Ok(()),
        }
    }

    pub fn apply(&self, rec: &Recording) -> Result<Recording> {
        match self {
            MitigationConfig::None => Ok(rec.clone()),
            MitigationConfig::Downsample { factor } => mitigate_downsample(rec, *factor),
            MitigationConfig::Lowpass { cutoff, order } => mitigate_lowpass(rec, *cutoff, *order),
            MitigationConfig::Antialias {
                target_rate,
                cutoff,
                order,
            } => mitigate_antialias(rec, *target_rate, *cutoff, *order),
            MitigationConfig::Notch { centers, width } => match centers {
                Some(c) => mitigate_notch(rec, c, *width),
                None => mitigate_notch(rec, &dtmf_alias_centers(rec.rate(), *width), *width),
            },
        }
    }

    /// `(rate, bandwidth)` after this step given the values before it.
    pub fn propagate(&self, rate: f64, bandwidth: f64) -> (f64, f64) {
        match *self {
            MitigationConfig::None | MitigationConfig::Notch { .. } => (rate, bandwidth),
            MitigationConfig::Downsample { factor } => {
                let r = rate / factor as f64;
                (r, bandwidth.min(r / 2.0))
            }
            MitigationConfig::Lowpass { cutoff, .. } => (rate, bandwidth.min(cutoff)),
            MitigationConfig::Antialias {
                target_rate, cutoff, ..
            } => (target_rate, bandwidth.min(cutoff).min(target_rate / 2.0)),
        }
    }
}

/// Ordered sequence of mitigation steps. Deserialises from either a single
/// step object or an array of steps.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "ChainRepr", into = "Vec<MitigationConfig>")]
pub struct MitigationChain(pub Vec<MitigationConfig>);

#[derive(Deserialize)]
#[serde(untagged)]
enum ChainRepr {
    One(MitigationConfig),
    Many(Vec<MitigationConfig>),
}

impl From<ChainRepr> for MitigationChain {
    fn from(r: ChainRepr) -> Self {
        match r {
            ChainRepr::One(c) => MitigationChain(vec![c]),
            ChainRepr::Many(v) => MitigationChain(v),
        }
    }
}

impl From<MitigationChain> for Vec<MitigationConfig> {
    fn from(c: MitigationChain) -> Self {
        c.0
    }
}

impl MitigationChain {
    pub fn single(step: MitigationConfig) -> Self {
        MitigationChain(vec![step])
    }

    pub fn steps(&self) -> &[MitigationConfig] {
        &self.0
    }

    /// Step kinds joined with `+`; `none` for an empty chain.
    pub fn label(&self) -> String {
        if self.0.is_empty() {
            return "none".to_string();
        }
        self.0.iter().map(|m| m.kind()).collect::<Vec<_>>().join("+")
    }

    pub fn validate(&self) -> Result<()> {
        self.0.iter().try_for_each(MitigationConfig::validate)
    }

    pub fn apply(&self, rec: &Recording) -> Result<Recording> {
        let mut cur = rec.clone();
        for step in &self.0 {
            cur = step.apply(&cur)?;
        }
        Ok(cur)
    }

    /// Retained bandwidth of a sensor at `rate` after the chain.
    pub fn bandwidth(&self, rate: f64) -> f64 {
        self.0
            .iter()
            .fold((rate, rate / 2.0), |(r, bw), m| m.propagate(r, bw))
            .1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtmf::{synthesize_tone, Component, SinusoidSum, ToneId};
    use crate::sampling::{alias_frequency, SamplingConfig};
    use crate::sensor_sim::{leak, make_default_model, Axis, Preset};
    use crate::spectrum::magnitude_spectrum;
    use std::f64::consts::PI;

    fn analytic(order: usize, fc: f64, rate: f64, f: f64) -> f64 {
        let r = (PI * f / rate).tan() / (PI * fc / rate).tan();
        (1.0 + r.powi(2 * order as i32)).powf(-0.5)
    }

    fn quiet_model(rate: f64) -> crate::sensor_sim::SensorModel {
        make_default_model(Preset::Flat, 0)
            .unwrap()
            .with_noise([0.0; 6])
            .unwrap()
            .with_harmonics(vec![])
            .with_sampling(SamplingConfig::new(rate).unwrap())
    }

    fn pure(freqs: &[f64], duration: f64) -> SinusoidSum {
        SinusoidSum::new(
            freqs
                .iter()
                .map(|&f| Component {
                    frequency: f,
                    amplitude: 1.0,
                    phase: 0.0,
                })
                .collect(),
            duration,
        )
        .unwrap()
    }

    fn tone(c: char) -> ToneId {
        ToneId::from_symbol(c).unwrap()
    }

    /// Spectral magnitude at `f` over the second half of `x` (past the transient).
    fn tail_magnitude(x: &[f64], rate: f64, f: f64) -> f64 {
        let tail = &x[x.len() / 2..];
        let m = magnitude_spectrum(tail);
        let bin = (f * tail.len() as f64 / rate).round() as usize;
        m[bin] / (tail.len() as f64 / 2.0)
    }

    #[test]
    fn downsample_rates() {
        let model = quiet_model(400.0);
        let rec = leak(tone('5'), &synthesize_tone(tone('5'), 0.5, 1.0).unwrap(), &model, 1).unwrap();
        assert_eq!(mitigate_downsample(&rec, 2).unwrap().rate(), 200.0);
        assert_eq!(mitigate_downsample(&rec, 8).unwrap().rate(), 50.0);
        assert_eq!(mitigate_downsample(&rec, 1).unwrap(), rec);
        assert_eq!(mitigate_downsample(&rec, 4).unwrap().label, rec.label);
        assert!(mitigate_downsample(&rec, 0).is_err());
    }

    #[test]
    fn lowpass_attenuates_per_analytic_response() {
        // 170 Hz and 33 Hz components at 400 Hz; 20 s so 0.05 Hz bins.
        let model = quiet_model(400.0);
        let rec = leak(tone('1'), &pure(&[170.0, 33.0], 20.0), &model, 2).unwrap();
        let x = rec.axis(Axis::Ax).samples();
        let base170 = tail_magnitude(x, 400.0, 170.0);
        let base33 = tail_magnitude(x, 400.0, 33.0);

        let y = mitigate_lowpass(&rec, 100.0, 5).unwrap();
        let ratio = tail_magnitude(y.axis(Axis::Ax).samples(), 400.0, 170.0) / base170;
        let want = analytic(5, 100.0, 400.0, 170.0);
        assert!((ratio.powi(2) / want.powi(2) - 1.0).abs() < 0.05, "{ratio} vs {want}");

        let y = mitigate_lowpass(&rec, 199.9, 5).unwrap();
        let r = tail_magnitude(y.axis(Axis::Ax).samples(), 400.0, 33.0) / base33;
        assert!((r - 1.0).abs() < 1e-3);

        // An alias at 33 Hz sits inside a 50 Hz passband.
        let y = mitigate_lowpass(&rec, 50.0, 5).unwrap();
        let r = tail_magnitude(y.axis(Axis::Ax).samples(), 400.0, 33.0) / base33;
        assert!(r > std::f64::consts::FRAC_1_SQRT_2, "33 Hz attenuated to {r}");
    }

    #[test]
    fn antialias_on_tone_d() {
        let model = quiet_model(1600.0);
        let rec = leak(tone('D'), &synthesize_tone(tone('D'), 10.0, 2.0).unwrap(), &model, 4).unwrap();
        assert_eq!(alias_frequency(1633.0, 1600.0), 33.0);
        assert_eq!(alias_frequency(941.0, 1600.0), 659.0);
        let out = mitigate_antialias(&rec, 400.0, 180.0, 8).unwrap();
        assert_eq!(out.rate(), 400.0);
        assert_eq!(out.len(), rec.len() / 4);

        // At the target rate 941 Hz would fold to 141 Hz, inside the passband.
        assert_eq!(alias_frequency(941.0, 400.0), 141.0);
        let y = out.axis(Axis::Ax).samples();
        let m941 = tail_magnitude(y, 400.0, 141.0);
        let m1633 = tail_magnitude(y, 400.0, 33.0);
        assert!(20.0 * m941.log10() <= -40.0, "941 Hz residual {m941}");
        assert!((m1633 - 1.0).abs() < 0.05, "33 Hz alias amplitude {m1633}");
    }

    #[test]
    fn antialias_passband_and_degenerate_factor() {
        let model = quiet_model(1600.0);
        let rec = leak(tone('1'), &pure(&[100.0], 10.0), &model, 4).unwrap();
        let out = mitigate_antialias(&rec, 400.0, 180.0, 8).unwrap();
        let amp = tail_magnitude(out.axis(Axis::Ax).samples(), 400.0, 100.0);
        let want = analytic(8, 180.0, 1600.0, 100.0);
        assert!((amp / want - 1.0).abs() < 0.05, "{amp} vs {want}");

        let same = mitigate_antialias(&rec, 1600.0, 180.0, 8).unwrap();
        assert_eq!(same, mitigate_lowpass(&rec, 180.0, 8).unwrap());

        assert!(mitigate_antialias(&rec, 700.0, 180.0, 8).is_err());
        assert!(mitigate_antialias(&rec, 400.0, 250.0, 8).is_err());
    }

    #[test]
    fn structural_antialias_superiority() {
        // Each tone lies between f_c and the 800 Hz oversampled Nyquist, yet
        // folds under f_c at 400 Hz.
        for (f, fc) in [(770.0, 100.0), (852.0, 100.0), (697.0, 180.0)] {
            assert!(alias_frequency(f, 400.0) < fc);
            let fast = leak(tone('1'), &pure(&[f], 4.0), &quiet_model(1600.0), 9).unwrap();
            let slow = mitigate_downsample(&fast, 4).unwrap();
            let lp = mitigate_lowpass(&slow, fc, 5).unwrap();
            let aa = mitigate_antialias(&fast, 400.0, fc, 5).unwrap();
            let alias = alias_frequency(f, 400.0);
            let e_lp = tail_magnitude(lp.axis(Axis::Ax).samples(), 400.0, alias);
            let e_aa = tail_magnitude(aa.axis(Axis::Ax).samples(), 400.0, alias);
            assert!(e_lp > 0.5, "low-pass kept {e_lp} of {f} Hz");
            assert!(e_aa < 0.01 * e_lp, "anti-alias kept {e_aa} of {f} Hz");
        }
    }

    #[test]
    fn config_serde_and_bandwidth() {
        let chain: MitigationChain = serde_json::from_str(
            r#"[{"kind":"downsample","factor":4},{"kind":"lowpass","cutoff":30}]"#,
        )
        .unwrap();
        assert_eq!(chain.label(), "downsample+lowpass");
        assert_eq!(chain.bandwidth(1600.0), 30.0);
        assert_eq!(
            chain.steps()[1],
            MitigationConfig::Lowpass {
                cutoff: 30.0,
                order: 5
            }
        );
        let one: MitigationChain = serde_json::from_str(r#"{"kind":"none"}"#).unwrap();
        assert_eq!(one.bandwidth(400.0), 200.0);
        let aa: MitigationChain =
            serde_json::from_str(r#"{"kind":"antialias","target_rate":400,"cutoff":100,"order":8}"#)
                .unwrap();
        assert_eq!(aa.bandwidth(1600.0), 100.0);
        for (n, bw) in [(1, 200.0), (2, 100.0), (4, 50.0), (8, 25.0)] {
            let c = MitigationChain::single(MitigationConfig::Downsample { factor: n });
            assert_eq!(c.bandwidth(400.0), bw);
        }
        assert!(serde_json::from_str::<MitigationChain>(r#"{"kind":"lowpass"}"#).is_err());
        assert!(MitigationConfig::Downsample { factor: 0 }.validate().is_err());
        assert!(MitigationConfig::Antialias {
            target_rate: 400.0,
            cutoff: 300.0,
            order: 8
        }
        .validate()
        .is_err());
    }

    #[test]
    fn default_notch_centers() {
        let c = dtmf_alias_centers(400.0, 6.0);
        assert_eq!(c, vec![103.0, 30.0, 52.0, 141.0, 9.0, 136.0, 123.0, 33.0]);
        let model = quiet_model(400.0);
        let rec = leak(tone('5'), &synthesize_tone(tone('5'), 0.5, 1.0).unwrap(), &model, 1).unwrap();
        let out = MitigationConfig::Notch {
            centers: None,
            width: 6.0,
        }
        .apply(&rec)
        .unwrap();
        assert_eq!(out.rate(), 400.0);
        assert_eq!(out.len(), rec.len());
    }
}

//! IIR filters as cascades of second-order sections.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::DiscreteSignal;

pub const MAX_BUTTERWORTH_ORDER: usize = 12;

/// One biquad, `H(z) = (b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Complex response at normalised angular frequency `w` (rad/sample).
    pub fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        (self.b0 + self.b1 * z1 + self.b2 * z2) / (1.0 + self.a1 * z1 + self.a2 * z2)
    }

    /// Roots of `z² + a1 z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        [(-self.a1 + disc) / 2.0, (-self.a1 - disc) / 2.0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Lowpass,
    Notch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterDesign {
    pub kind: FilterKind,
    pub cutoffs: Vec<f64>,
    pub order: usize,
    pub design_rate: f64,
}

/// A designed filter: sections plus the parameters they came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    sections: Vec<Biquad>,
    design: FilterDesign,
}

impl FilterSpec {
    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn design(&self) -> &FilterDesign {
        &self.design
    }

    pub fn response(&self, f: f64) -> Complex64 {
        let w = 2.0 * PI * f / self.design.design_rate;
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(w))
    }

    pub fn magnitude(&self, f: f64) -> f64 {
        self.response(f).norm()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.sections.iter().flat_map(|s| s.poles()).collect()
    }

    /// All poles strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0)
    }

    /// `n` samples of the impulse response.
    pub fn impulse_response(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        if n > 0 {
            x[0] = 1.0;
        }
        run_sections(&self.sections, &mut x);
        x
    }

    /// `section,b0,b1,b2,a1,a2` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,b0,b1,b2,a1,a2\n");
        for (i, s) in self.sections.iter().enumerate() {
            let _ = writeln!(out, "{i},{},{},{},{},{}", s.b0, s.b1, s.b2, s.a1, s.a2);
        }
        out
    }
}

/// Digital Butterworth low-pass: analog prototype poles, cutoff pre-warped to
/// `rate/π · tan(π f_c / rate)`, bilinear transform, one section per conjugate
/// pole pair (plus a first-order section for odd orders). Every section is
/// normalised to unit DC gain.
pub fn butterworth_lowpass(order: usize, cutoff: f64, rate: f64) -> Result<FilterSpec> {
    if !(1..=MAX_BUTTERWORTH_ORDER).contains(&order) {
        return Err(Error::invalid(format!(
            "Butterworth order must lie in 1..={MAX_BUTTERWORTH_ORDER}, got {order}"
        )));
    }
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::invalid(format!("design rate must be positive, got {rate}")));
    }
    if !(cutoff > 0.0 && cutoff < rate / 2.0) {
        return Err(Error::invalid(format!(
            "cutoff must lie in (0, {}) Hz, got {cutoff}",
            rate / 2.0
        )));
    }
    let warped = (PI * cutoff / rate).tan();
    let n = order as f64;
    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for k in 0..order / 2 {
        let theta = PI * (2 * k + 1) as f64 / (2.0 * n);
        let s = warped * Complex64::new(-theta.sin(), theta.cos());
        let z = (1.0 + s) / (1.0 - s);
        let a1 = -2.0 * z.re;
        let a2 = z.norm_sqr();
        let g = (1.0 + a1 + a2) / 4.0;
        sections.push(Biquad {
            b0: g,
            b1: 2.0 * g,
            b2: g,
            a1,
            a2,
        });
    }
    if order % 2 == 1 {
        let s = -warped;
        let z = (1.0 + s) / (1.0 - s);
        let a1 = -z;
        let g = (1.0 + a1) / 2.0;
        sections.push(Biquad {
            b0: g,
            b1: g,
            b2: 0.0,
            a1,
            a2: 0.0,
        });
    }
    Ok(FilterSpec {
        sections,
        design: FilterDesign {
            kind: FilterKind::Lowpass,
            cutoffs: vec![cutoff],
            order,
            design_rate: rate,
        },
    })
}

/// Cascade of biquad notches (quality factor `center / width`), one per
/// center. An empty list gives the identity filter.
pub fn notch_bank(centers: &[f64], width: f64, rate: f64) -> Result<FilterSpec> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::invalid(format!("design rate must be positive, got {rate}")));
    }
    if !centers.is_empty() && !(width > 0.0) {
        return Err(Error::invalid(format!("notch width must be positive, got {width}")));
    }
    let nyquist = rate / 2.0;
    let sections = centers
        .iter()
        .map(|&f0| {
            if !(f0 - width / 2.0 > 0.0 && f0 + width / 2.0 < nyquist) {
                return Err(Error::invalid(format!(
                    "notch {f0} ± {} Hz leaves (0, {nyquist}) Hz",
                    width / 2.0
                )));
            }
            let w0 = 2.0 * PI * f0 / rate;
            let alpha = w0.sin() / (2.0 * f0 / width);
            let a0 = 1.0 + alpha;
            let c = -2.0 * w0.cos() / a0;
            Ok(Biquad {
                b0: 1.0 / a0,
                b1: c,
                b2: 1.0 / a0,
                a1: c,
                a2: (1.0 - alpha) / a0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FilterSpec {
        sections,
        design: FilterDesign {
            kind: FilterKind::Notch,
            cutoffs: centers.to_vec(),
            order: 2 * centers.len(),
            design_rate: rate,
        },
    })
}

fn run_sections(sections: &[Biquad], x: &mut [f64]) {
    for s in sections {
        let (mut z1, mut z2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let y = s.b0 * input + z1;
            z1 = s.b1 * input - s.a1 * y + z2;
            z2 = s.b2 * input - s.a2 * y;
            *v = y;
        }
    }
}

/// Causal transposed direct-form II filtering from zero state.
pub fn apply_filter(spec: &FilterSpec, sig: &DiscreteSignal) -> Result<DiscreteSignal> {
    let design_rate = spec.design.design_rate;
    if (sig.rate() - design_rate).abs() > 1e-9 * design_rate {
        return Err(Error::invalid(format!(
            "signal rate {} Hz does not match filter design rate {design_rate} Hz",
            sig.rate()
        )));
    }
    let mut samples = sig.samples().to_vec();
    run_sections(&spec.sections, &mut samples);
    sig.with_samples(samples)
}

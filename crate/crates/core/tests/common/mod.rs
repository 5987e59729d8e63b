//! Direct-formula oracles shared by the property and acceptance suites.

use std::f64::consts::TAU;

use toneleak::features::{frame_features, FEATURE_NAMES};

pub fn brute_alias(f: f64, fs: f64) -> f64 {
    let m_max = ((f / fs).ceil() as i64 + 1).max(64);
    (0..=m_max)
        .map(|m| (m as f64 * fs - f).abs())
        .fold(f64::INFINITY, f64::min)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-6)
}

struct Naive {
    pub mean: f64,
    pub median: f64,
    pub var: f64,
    pub skew: f64,
    pub kurt: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    pub power: f64,
    pub abs_area: f64,
    pub crossings: f64,
    pub entropy: f64,
    pub mags: Vec<f64>,
}

fn naive(x: &[f64], rate: f64) -> Naive {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let moment = |p: i32| x.iter().map(|v| (v - mean).powi(p)).sum::<f64>() / n;
    let var = moment(2);
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| {
        let pos = p * (n - 1.0);
        let (i, frac) = (pos.floor() as usize, pos.fract());
        if i + 1 < s.len() {
            s[i] * (1.0 - frac) + s[i + 1] * frac
        } else {
            s[i]
        }
    };
    let median = if s.len() % 2 == 1 {
        s[s.len() / 2]
    } else {
        (s[s.len() / 2 - 1] + s[s.len() / 2]) / 2.0
    };
    let len = x.len();
    let mags: Vec<f64> = (0..=len / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let w = -TAU * (k * t) as f64 / n;
                re += v * w.cos();
                im += v * w.sin();
            }
            re.hypot(im)
        })
        .collect();
    let total: f64 = mags.iter().map(|m| m * m).sum();
    let entropy = -mags
        .iter()
        .map(|m| m * m / total)
        .filter(|p| *p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>();
    let mut crossings = 0;
    for i in 1..len {
        let (a, b) = (x[i - 1] - mean, x[i] - mean);
        if (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0) {
            crossings += 1;
        }
    }
    Naive {
        mean,
        median,
        var,
        skew: moment(3) / var.powf(1.5),
        kurt: moment(4) / (var * var) - 3.0,
        q1: q(0.25),
        q3: q(0.75),
        min: s[0],
        max: s[len - 1],
        power: x.iter().map(|v| v * v).sum::<f64>() / n,
        abs_area: x.iter().map(|v| v.abs()).sum::<f64>() / rate,
        crossings: crossings as f64 / (n - 1.0),
        entropy,
        mags,
    }
}

/// Amplitude of the `f` Hz component over the second half of `y`, by a
/// least-squares fit of a sine/cosine pair.
pub fn steady_gain(y: &[f64], f: f64, rate: f64) -> f64 {
    let n = y.len();
    let (mut ss, mut sc, mut cc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, v) in y.iter().enumerate().skip(n / 2) {
        let (s, c) = (TAU * f * k as f64 / rate).sin_cos();
        ss += s * s;
        sc += s * c;
        cc += c * c;
        ys += v * s;
        yc += v * c;
    }
    let det = ss * cc - sc * sc;
    let a = (ys * cc - yc * sc) / det;
    let b = (yc * ss - ys * sc) / det;
    a.hypot(b)
}

/// First feature of `x` that disagrees with the direct formulas beyond 1e-9
/// relative, described for the failure message.
pub fn feature_mismatch(x: &[f64], rate: f64) -> Option<String> {
    let v = frame_features(x, rate).unwrap();
    let o = naive(x, rate);
    let variation = if o.mean.abs() < 1e-12 { 0.0 } else { o.var.sqrt() / o.mean.abs() };
    let expected = [
        ("mean", o.mean),
        ("median", o.median),
        ("q2", o.median),
        ("variance", o.var),
        ("std", o.var.sqrt()),
        ("skew", o.skew),
        ("kurtosis", o.kurt),
        ("q1", o.q1),
        ("q3", o.q3),
        ("iqr", o.q3 - o.q1),
        ("min", o.min),
        ("max", o.max),
        ("range", o.max - o.min),
        ("power", o.power),
        ("abs_area", o.abs_area),
        ("mean_crossings", o.crossings),
        ("variation", variation),
        ("spectral_entropy", o.entropy),
    ];
    assert_eq!(expected.len(), FEATURE_NAMES.len());
    for (name, want) in expected {
        let got = v[FEATURE_NAMES.iter().position(|n| *n == name).unwrap()];
        if !close(got, want, 1e-9) {
            return Some(format!("{name}: {got} vs {want} (len {})", x.len()));
        }
    }
    let scale = o.mags.iter().copied().fold(0.0, f64::max);
    for (k, (m, want)) in v[FEATURE_NAMES.len()..].iter().zip(&o.mags).enumerate() {
        if (m - want).abs() > 1e-9 * scale {
            return Some(format!("bin {k}: {m} vs {want} (len {})", x.len()));
        }
    }
    None
}

/// Relative gap between time-domain energy and the energy recovered from
/// the one-sided magnitude bins.
pub fn parseval_error(x: &[f64]) -> f64 {
    let n = x.len();
    let mags = &frame_features(x, 400.0).unwrap()[FEATURE_NAMES.len()..];
    let mut spectral = mags[0] * mags[0];
    for (k, m) in mags.iter().enumerate().skip(1) {
        let twice = !(n.is_multiple_of(2) && k == n / 2);
        spectral += if twice { 2.0 } else { 1.0 } * m * m;
    }
    let energy: f64 = x.iter().map(|v| v * v).sum();
    let spectral = spectral / n as f64;
    (energy - spectral).abs() / energy.max(spectral).max(1e-300)
}

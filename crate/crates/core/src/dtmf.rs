//! The 16-symbol touchtone alphabet and dual-tone synthesis.
//!
//! Symbols are laid out as on a keypad, row-major:
//!
//! ```text
//!            1209  1336  1477  1633
//!      697    1     2     3     A
//!      770    4     5     6     B
//!      852    7     8     9     C
//!      941    *     0     #     D
//! ```

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Low-group (row) frequencies in Hz.
pub const ROW_FREQS: [f64; 4] = [697.0, 770.0, 852.0, 941.0];
/// High-group (column) frequencies in Hz.
pub const COL_FREQS: [f64; 4] = [1209.0, 1336.0, 1477.0, 1633.0];

const SYMBOLS: [char; 16] = [
    '1', '2', '3', 'A', //
    '4', '5', '6', 'B', //
    '7', '8', '9', 'C', //
    '*', '0', '#', 'D',
];

/// One of the 16 touchtone symbols. Ordered by keypad position (row-major),
/// which is also the class index used by the classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ToneId(u8);

impl ToneId {
    pub const COUNT: usize = 16;

    pub fn all() -> impl Iterator<Item = ToneId> {
        (0..Self::COUNT as u8).map(ToneId)
    }

    pub fn from_index(index: usize) -> Option<ToneId> {
        (index < Self::COUNT).then_some(ToneId(index as u8))
    }

    pub fn from_symbol(symbol: char) -> Result<ToneId> {
        let upper = symbol.to_ascii_uppercase();
        SYMBOLS
            .iter()
            .position(|&s| s == upper)
            .map(|i| ToneId(i as u8))
            .ok_or_else(|| Error::invalid(format!("unknown touchtone symbol {symbol:?}")))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn symbol(self) -> char {
        SYMBOLS[self.index()]
    }

    pub fn row(self) -> usize {
        self.index() / 4
    }

    pub fn col(self) -> usize {
        self.index() % 4
    }
}

impl fmt::Display for ToneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl FromStr for ToneId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.trim().chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => ToneId::from_symbol(c),
            _ => Err(Error::invalid(format!("not a touchtone symbol: {s:?}"))),
        }
    }
}

impl Serialize for ToneId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.symbol().to_string())
    }
}

impl<'de> Deserialize<'de> for ToneId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Row/column frequency assignment for the keypad.
#[derive(Clone, Debug, PartialEq)]
pub struct ToneTable {
    rows: [f64; 4],
    cols: [f64; 4],
}

impl Default for ToneTable {
    fn default() -> Self {
        Self::standard()
    }
}

impl ToneTable {
    pub fn standard() -> Self {
        ToneTable {
            rows: ROW_FREQS,
            cols: COL_FREQS,
        }
    }

    /// Builds a custom table. All eight frequencies must be distinct, positive,
    /// and every row frequency must lie below every column frequency.
    pub fn new(rows: [f64; 4], cols: [f64; 4]) -> Result<Self> {
        let all: Vec<f64> = rows.iter().chain(cols.iter()).copied().collect();
        if all.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(Error::invalid("tone frequencies must be positive"));
        }
        for (i, a) in all.iter().enumerate() {
            if all[i + 1..].contains(a) {
                return Err(Error::invalid("tone frequencies must be distinct"));
            }
        }
        let max_row = rows.iter().copied().fold(f64::MIN, f64::max);
        let min_col = cols.iter().copied().fold(f64::MAX, f64::min);
        if max_row >= min_col {
            return Err(Error::invalid("low group must lie below high group"));
        }
        Ok(ToneTable { rows, cols })
    }

    pub fn rows(&self) -> &[f64; 4] {
        &self.rows
    }

    pub fn cols(&self) -> &[f64; 4] {
        &self.cols
    }

    pub fn frequencies(&self, tone: ToneId) -> (f64, f64) {
        (self.rows[tone.row()], self.cols[tone.col()])
    }

    /// All eight frequencies, rows first then columns.
    pub fn all_frequencies(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        out[..4].copy_from_slice(&self.rows);
        out[4..].copy_from_slice(&self.cols);
        out
    }

    /// Symbol → `[low, high]` document.
    pub fn to_json(&self) -> serde_json::Value {
        let map: BTreeMap<String, [f64; 2]> = ToneId::all()
            .map(|t| {
                let (lo, hi) = self.frequencies(t);
                (t.symbol().to_string(), [lo, hi])
            })
            .collect();
        serde_json::to_value(map).expect("tone table serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let map: BTreeMap<String, [f64; 2]> = serde_json::from_value(value.clone())?;
        if map.len() != ToneId::COUNT {
            return Err(Error::invalid("tone table must list all 16 symbols"));
        }
        let mut rows = [f64::NAN; 4];
        let mut cols = [f64::NAN; 4];
        for (symbol, [lo, hi]) in &map {
            let tone: ToneId = symbol.parse()?;
            for (slot, f) in [(&mut rows[tone.row()], *lo), (&mut cols[tone.col()], *hi)] {
                if slot.is_nan() {
                    *slot = f;
                } else if *slot != f {
                    return Err(Error::invalid(format!("inconsistent frequency for {symbol}")));
                }
            }
        }
        ToneTable::new(rows, cols)
    }

    pub fn classify_pair(&self, f1: f64, f2: f64, tol: f64) -> Result<Option<ToneId>> {
        if !(tol >= 0.0) {
            return Err(Error::invalid("tolerance must be non-negative"));
        }
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let mut found = None;
        for tone in ToneId::all() {
            let (r, c) = self.frequencies(tone);
            if (lo - r).abs() <= tol && (hi - c).abs() <= tol {
                if found.is_some() {
                    return Err(Error::Ambiguous { f1, f2, tol });
                }
                found = Some(tone);
            }
        }
        Ok(found)
    }
}

/// `(low, high)` frequencies of `tone` from the standard table.
pub fn tone_frequencies(tone: ToneId) -> (f64, f64) {
    ToneTable::standard().frequencies(tone)
}

/// Inverse lookup against the standard table: the unique tone whose row and
/// column frequencies both lie within `tol` of the pair (order-insensitive).
pub fn classify_frequency_pair(f1: f64, f2: f64, tol: f64) -> Result<Option<ToneId>> {
    ToneTable::standard().classify_pair(f1, f2, tol)
}

/// A single sinusoidal component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub frequency: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// Continuous-time sum of sinusoids, evaluable at any instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinusoidSum {
    components: Vec<Component>,
    duration: f64,
}

impl SinusoidSum {
    pub fn new(components: Vec<Component>, duration: f64) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::invalid(format!("duration must be positive, got {duration}")));
        }
        for c in &components {
            if !(c.frequency > 0.0) || !c.frequency.is_finite() {
                return Err(Error::invalid(format!(
                    "component frequency must be positive, got {}",
                    c.frequency
                )));
            }
            if !c.amplitude.is_finite() || !c.phase.is_finite() {
                return Err(Error::invalid("component amplitude and phase must be finite"));
            }
        }
        Ok(SinusoidSum {
            components,
            duration,
        })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.amplitude * (TAU * c.frequency * t + c.phase).sin())
            .sum()
    }
}

/// Dual-tone model of `tone`: two zero-phase components carrying half of
/// `amplitude` each.
pub fn synthesize_tone(tone: ToneId, duration: f64, amplitude: f64) -> Result<SinusoidSum> {
    if !(amplitude > 0.0) || !amplitude.is_finite() {
        return Err(Error::invalid(format!("amplitude must be positive, got {amplitude}")));
    }
    let (lo, hi) = tone_frequencies(tone);
    let half = amplitude / 2.0;
    SinusoidSum::new(
        vec![
            Component {
                frequency: lo,
                amplitude: half,
                phase: 0.0,
            },
            Component {
                frequency: hi,
                amplitude: half,
                phase: 0.0,
            },
        ],
        duration,
    )
}

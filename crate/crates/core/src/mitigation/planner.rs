use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampling::alias_frequency;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlanRow {
    pub sample_rate: f64,
    /// Sensitive frequencies whose alias lands above the cutoff, where a
    /// low-pass at `f_c` can remove it.
    pub attenuable: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplingPlan {
    pub cutoff: f64,
    pub rows: Vec<PlanRow>,
    /// Smallest candidate achieving the maximum count; `None` without candidates.
    pub best: Option<f64>,
}

impl SamplingPlan {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample_rate,attenuable,best\n");
        for r in &self.rows {
            let best = self.best == Some(r.sample_rate);
            let _ = writeln!(out, "{},{},{}", r.sample_rate, r.attenuable, best);
        }
        out
    }
}

/// Counts, for each candidate rate, how many sensitive frequencies alias
/// above `cutoff`. A zero cutoff is accepted and counts every non-DC alias.
pub fn plan_sampling_rate(sensitive: &[f64], cutoff: f64, candidates: &[f64]) -> Result<SamplingPlan> {
    if !(cutoff >= 0.0) || !cutoff.is_finite() {
        return Err(Error::invalid(format!("cutoff must be non-negative, got {cutoff}")));
    }
    if let Some(f) = sensitive.iter().find(|f| !(**f >= 0.0) || !f.is_finite()) {
        return Err(Error::invalid(format!("sensitive frequency {f} must be non-negative")));
    }
    if let Some(fs) = candidates.iter().find(|&&fs| !(fs > 2.0 * cutoff) || !fs.is_finite()) {
        return Err(Error::invalid(format!(
            "candidate rate {fs} Hz must exceed twice the cutoff ({cutoff} Hz)"
        )));
    }
    let rows: Vec<PlanRow> = candidates
        .iter()
        .map(|&fs| PlanRow {
            sample_rate: fs,
            attenuable: sensitive
                .iter()
                .filter(|&&f| alias_frequency(f, fs) > cutoff)
                .count(),
        })
        .collect();
    let best = rows
        .iter()
        .fold(None::<PlanRow>, |best, r| match best {
            Some(b) if b.attenuable > r.attenuable => Some(b),
            Some(b) if b.attenuable == r.attenuable && b.sample_rate <= r.sample_rate => Some(b),
            _ => Some(*r),
        })
        .map(|r| r.sample_rate);
    Ok(SamplingPlan { cutoff, rows, best })
}

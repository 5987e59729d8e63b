//! Selective axis integration: rank the axes by single-axis validation
//! accuracy, then grow the subset greedily and keep the best combination.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gbt::{sub_seed, train, FeatureMatrix, GbtHyperparams};
use super::report::evaluate;
use crate::dtmf::ToneId;
use crate::error::{Error, Result};
use crate::features::{extract, WindowingParams};
use crate::rng::stream_rng;
use crate::sensor_sim::{Axis, Recording};

/// Per-axis feature blocks for a set of recordings.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisFeatures {
    rows: usize,
    block_len: [usize; 6],
    /// Row-major `rows × block_len[a]` per axis.
    blocks: [Vec<f64>; 6],
    labels: Vec<ToneId>,
}

impl AxisFeatures {
    /// Each axis block is padded to the longest natural length among
    /// `recordings`.
    pub fn from_recordings(recordings: &[Recording], params: &WindowingParams) -> Result<Self> {
        let longest = recordings.iter().map(Recording::len).max().unwrap_or(0);
        Self::with_block_len(recordings, params, params.natural_len(longest, 1))
    }

    /// Pads every axis block to `block` values; fails if any recording
    /// needs more.
    pub fn with_block_len(
        recordings: &[Recording],
        params: &WindowingParams,
        block: usize,
    ) -> Result<Self> {
        params.validate()?;
        if recordings.is_empty() {
            return Err(Error::invalid("no recordings to featurise"));
        }
        let per_rec: Vec<Vec<Vec<f64>>> = recordings
            .par_iter()
            .map(|rec| {
                Axis::ALL
                    .iter()
                    .map(|&a| extract(rec, &[a], params, block).map(|v| v.values))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let blocks = std::array::from_fn(|a| {
            per_rec
                .iter()
                .flat_map(|axes| axes[a].iter().copied())
                .collect()
        });
        Ok(AxisFeatures {
            rows: recordings.len(),
            block_len: [block; 6],
            blocks,
            labels: recordings.iter().map(|r| r.label).collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn block_len(&self) -> usize {
        self.block_len[0]
    }

    pub fn labels(&self) -> &[ToneId] {
        &self.labels
    }

    pub fn labels_of(&self, rows: &[usize]) -> Vec<ToneId> {
        rows.iter().map(|&i| self.labels[i]).collect()
    }

    /// Matrix of `rows` with the axes concatenated in canonical order.
    pub fn matrix(&self, axes: &[Axis], rows: &[usize]) -> Result<FeatureMatrix> {
        let axes = canonical(axes);
        let data: Vec<Vec<f64>> = rows
            .iter()
            .map(|&i| {
                axes.iter()
                    .flat_map(|a| {
                        let b = self.block_len[a.index()];
                        self.blocks[a.index()][i * b..(i + 1) * b].iter().copied()
                    })
                    .collect()
            })
            .collect();
        FeatureMatrix::from_rows(&data)
    }
}

fn canonical(axes: &[Axis]) -> Vec<Axis> {
    let mut v = axes.to_vec();
    v.sort_by_key(|a| a.index());
    v.dedup();
    v
}

/// Stratified split of `rows` into (fit, validation); per class,
/// `round(fraction · count)` rows are held out.
pub fn validation_split(
    labels: &[ToneId],
    rows: &[usize],
    fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut fit = Vec::new();
    let mut val = Vec::new();
    for t in ToneId::all() {
        let mut members: Vec<usize> = rows.iter().copied().filter(|&i| labels[i] == t).collect();
        members.shuffle(&mut stream_rng(seed, t.index() as u64));
        let n_val = (members.len() as f64 * fraction).round() as usize;
        val.extend_from_slice(&members[..n_val]);
        fit.extend_from_slice(&members[n_val..]);
    }
    fit.sort_unstable();
    val.sort_unstable();
    (fit, val)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub axes: Vec<Axis>,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSelection {
    /// Chosen subset in canonical order.
    pub axes: Vec<Axis>,
    pub val_accuracy: f64,
    /// Axes from best to worst single-axis validation accuracy.
    pub ranking: Vec<Axis>,
    /// The six single-axis candidates, then the cumulative top-2 … top-6.
    pub candidates: Vec<Candidate>,
    /// Training log-loss histories of every candidate model.
    pub loss_histories: Vec<Vec<f64>>,
}

impl AxisSelection {
    pub fn best_single_accuracy(&self) -> f64 {
        self.candidates[..6]
            .iter()
            .map(|c| c.val_accuracy)
            .fold(0.0, f64::max)
    }
}

fn score(
    feats: &AxisFeatures,
    axes: &[Axis],
    fit: &[usize],
    val: &[usize],
    hp: &GbtHyperparams,
) -> Result<(Candidate, Vec<f64>)> {
    let model = train(&feats.matrix(axes, fit)?, &feats.labels_of(fit), hp)?;
    let report = evaluate(&model, &feats.matrix(axes, val)?, &feats.labels_of(val))?;
    Ok((
        Candidate {
            axes: canonical(axes),
            val_accuracy: report.accuracy,
        },
        model.loss_history,
    ))
}

pub fn select_axes(
    feats: &AxisFeatures,
    fit: &[usize],
    val: &[usize],
    hp: &GbtHyperparams,
) -> Result<AxisSelection> {
    if val.is_empty() {
        return Err(Error::invalid("validation split is empty"));
    }
    if fit.iter().any(|i| val.contains(i)) {
        return Err(Error::invalid("validation rows overlap the fitting rows"));
    }
    let mut candidates = Vec::with_capacity(11);
    let mut loss_histories = Vec::with_capacity(11);
    for (k, &a) in Axis::ALL.iter().enumerate() {
        let (c, l) = score(feats, &[a], fit, val, &sub_seed(hp, k as u64))?;
        candidates.push(c);
        loss_histories.push(l);
    }
    let mut ranking = Axis::ALL.to_vec();
    // Stable sort keeps the canonical order among equal accuracies.
    ranking.sort_by(|a, b| {
        candidates[b.index()]
            .val_accuracy
            .total_cmp(&candidates[a.index()].val_accuracy)
    });
    for top in 2..=6 {
        let (c, l) = score(feats, &ranking[..top], fit, val, &sub_seed(hp, 4 + top as u64))?;
        candidates.push(c);
        loss_histories.push(l);
    }
    let best = candidates
        .iter()
        .enumerate()
        .fold(0, |b, (i, c)| if c.val_accuracy > candidates[b].val_accuracy { i } else { b });
    Ok(AxisSelection {
        axes: candidates[best].axes.clone(),
        val_accuracy: candidates[best].val_accuracy,
        ranking,
        candidates,
        loss_histories,
    })
}

use serde::{Deserialize, Serialize};

use crate::classifier::{
    evaluate, select_axes, sub_seed, train, validation_split, AxisFeatures, AxisSelection,
    EvalReport, GbtHyperparams, TreeEnsembleModel,
};
use crate::error::Result;
use crate::features::WindowingParams;
use crate::rng::derive_seed;
use crate::sensor_sim::Dataset;

/// Share of the training split held out for axis selection.
pub const VALIDATION_FRACTION: f64 = 0.25;
const VALIDATION_STREAM: u64 = 0x5e1ec7;
const FINAL_MODEL_STREAM: u64 = 100;

/// A model trained by [`train_pipeline`], with what is needed to featurise
/// new data the same way.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub model: TreeEnsembleModel,
    pub selection: AxisSelection,
    pub windowing: WindowingParams,
    /// Per-axis feature block length the model was trained with.
    pub block_len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub report: EvalReport,
    pub trained: TrainedPipeline,
}

impl TrainedPipeline {
    /// Scores the test split of `ds` without retraining.
    pub fn evaluate_on(&self, ds: &Dataset) -> Result<EvalReport> {
        let feats = AxisFeatures::with_block_len(&ds.recordings, &self.windowing, self.block_len)?;
        evaluate(
            &self.model,
            &feats.matrix(&self.selection.axes, &ds.test)?,
            &feats.labels_of(&ds.test),
        )
    }

    /// Every training log-loss history produced while building this pipeline.
    pub fn loss_histories(&self) -> impl Iterator<Item = &[f64]> {
        self.selection
            .loss_histories
            .iter()
            .map(Vec::as_slice)
            .chain(std::iter::once(&self.model.loss_history[..]))
    }
}

fn train_with(ds: &Dataset, feats: &AxisFeatures, windowing: &WindowingParams, hp: &GbtHyperparams) -> Result<TrainedPipeline> {
    let (fit, val) = validation_split(
        feats.labels(),
        &ds.train,
        VALIDATION_FRACTION,
        derive_seed(hp.seed, VALIDATION_STREAM),
    );
    let selection = select_axes(feats, &fit, &val, hp)?;
    let mut model = train(
        &feats.matrix(&selection.axes, &ds.train)?,
        &feats.labels_of(&ds.train),
        &sub_seed(hp, FINAL_MODEL_STREAM),
    )?;
    model.axes = selection.axes.clone();
    Ok(TrainedPipeline {
        model,
        selection,
        windowing: *windowing,
        block_len: feats.block_len(),
    })
}

/// Axis selection on the training split, a final model on the whole
/// training split, nothing evaluated.
pub fn train_pipeline(ds: &Dataset, windowing: &WindowingParams, hp: &GbtHyperparams) -> Result<TrainedPipeline> {
    let feats = AxisFeatures::from_recordings(&ds.recordings, windowing)?;
    train_with(ds, &feats, windowing, hp)
}

/// [`train_pipeline`] followed by evaluation on the test split.
pub fn run_pipeline(ds: &Dataset, windowing: &WindowingParams, hp: &GbtHyperparams) -> Result<PipelineOutcome> {
    let feats = AxisFeatures::from_recordings(&ds.recordings, windowing)?;
    let trained = train_with(ds, &feats, windowing, hp)?;
    let report = evaluate(
        &trained.model,
        &feats.matrix(&trained.selection.axes, &ds.test)?,
        &feats.labels_of(&ds.test),
    )?;
    Ok(PipelineOutcome { report, trained })
}

//! Gradient-boosted tree classifier, axis selection and evaluation.

mod gbt;
pub mod loss;
mod report;
mod selection;

pub use gbt::{
    fit, sub_seed, train, FeatureMatrix, GbtHyperparams, TreeEnsembleModel, TreeNode, MODEL_FORMAT,
    MODEL_VERSION, NUM_CLASSES,
};
pub use report::{evaluate, EvalReport};
pub use selection::{select_axes, validation_split, AxisFeatures, AxisSelection, Candidate};

//! Experiment plumbing behind the `toneleak` command line: configs, the
//! on-disk dataset format, the end-to-end pipeline and the subcommands.

mod commands;
mod config;
mod dataset_io;
mod pipeline;

pub use commands::{
    cmd_gen, cmd_mitigate, cmd_plan, cmd_sweep, cmd_train_eval, generate, PlanConfig,
    SweepOptions, SweepResult, SweepRow, TrainEvalSummary,
};
pub use config::{DatasetConfig, ExperimentConfig, ModelConfig};
pub use dataset_io::{
    read_dataset, read_manifest, recording_from_csv, recording_to_csv, write_dataset, Manifest,
    ManifestEntry, Split, MANIFEST_FILE, RECORDINGS_DIR,
};
pub use pipeline::{run_pipeline, train_pipeline, PipelineOutcome, TrainedPipeline, VALIDATION_FRACTION};

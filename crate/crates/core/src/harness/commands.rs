use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::dataset_io::{read_dataset, write_dataset, Manifest};
use super::pipeline::{run_pipeline, train_pipeline, PipelineOutcome, TrainedPipeline};
use crate::classifier::{EvalReport, GbtHyperparams};
use crate::dtmf::ToneTable;
use crate::error::{Error, Result};
use crate::features::WindowingParams;
use crate::mitigation::{plan_sampling_rate, MitigationChain, SamplingPlan};
use crate::sensor_sim::{generate_dataset, Axis, Dataset};

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Simulates the configured dataset in memory.
pub fn generate(cfg: &ExperimentConfig) -> Result<Dataset> {
    cfg.validate()?;
    generate_dataset(
        &cfg.sensor_model()?,
        cfg.dataset.reps,
        cfg.dataset.duration,
        cfg.dataset.master_seed,
    )
}

/// `gen`: writes the configured dataset to `out`.
pub fn cmd_gen(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    let ds = generate(cfg)?;
    write_dataset(
        out,
        &ds,
        cfg.model.preset.name(),
        cfg.model.seed,
        cfg.dataset.master_seed,
        Vec::new(),
    )
}

/// `mitigate`: applies `chain` to every recording of the dataset at `input`.
pub fn cmd_mitigate(input: &Path, chain: &MitigationChain, out: &Path) -> Result<Manifest> {
    chain.validate()?;
    let (ds, manifest) = read_dataset(input)?;
    let mitigated = ds.try_map(|r| chain.apply(r))?;
    let mut applied = manifest.mitigation_chain.clone();
    applied.extend(chain.steps().iter().cloned());
    write_dataset(
        out,
        &mitigated,
        &manifest.preset,
        manifest.model_seed,
        manifest.master_seed,
        applied,
    )
}

/// Selected axes and validation scores written next to the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainEvalSummary {
    pub accuracy: f64,
    pub axes: Vec<Axis>,
    pub selection_val_accuracy: f64,
    pub best_single_val_accuracy: f64,
}

/// `train-eval`: axis selection, final training and test-split evaluation.
/// With `out`, writes `report.json`, `report.csv`, `selection.json` and
/// `model.json` there.
pub fn cmd_train_eval(
    input: &Path,
    windowing: &WindowingParams,
    hp: &GbtHyperparams,
    out: Option<&Path>,
) -> Result<PipelineOutcome> {
    let (ds, _) = read_dataset(input)?;
    let outcome = run_pipeline(&ds, windowing, hp)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_outcome(dir, &outcome.report, &outcome.trained)?;
        fs::write(dir.join("model.json"), outcome.trained.model.to_json()? + "\n")?;
    }
    Ok(outcome)
}

fn write_outcome(dir: &Path, report: &EvalReport, trained: &TrainedPipeline) -> Result<()> {
    write_json(&dir.join("report.json"), report)?;
    fs::write(dir.join("report.csv"), report.to_csv())?;
    write_json(&dir.join("selection.json"), &trained.selection)?;
    write_json(
        &dir.join("summary.json"),
        &TrainEvalSummary {
            accuracy: report.accuracy,
            axes: trained.selection.axes.clone(),
            selection_val_accuracy: trained.selection.val_accuracy,
            best_single_val_accuracy: trained.selection.best_single_accuracy(),
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mitigation: String,
    /// Unattenuated band delivered after the chain.
    pub bandwidth_hz: f64,
    pub accuracy: f64,
    pub axes: Vec<Axis>,
    pub runtime_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mitigation,bandwidth_hz,accuracy,axes,runtime_s\n");
        for r in &self.rows {
            let axes: Vec<&str> = r.axes.iter().map(|a| a.name()).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{:.3}",
                r.mitigation,
                r.bandwidth_hz,
                r.accuracy,
                axes.join("+"),
                r.runtime_s
            );
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SweepOptions {
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Score every cell with the model trained on unmitigated data instead
    /// of retraining on the mitigated data.
    pub fixed_model: bool,
}

struct Cell {
    report: EvalReport,
    trained: Option<TrainedPipeline>,
    axes: Vec<Axis>,
    runtime_s: f64,
}

fn run_cell(
    ds: &Dataset,
    chain: &MitigationChain,
    cfg: &ExperimentConfig,
    fixed: Option<&TrainedPipeline>,
) -> Result<Cell> {
    let start = Instant::now();
    let mitigated = ds.try_map(|r| chain.apply(r))?;
    let (report, trained) = match fixed {
        Some(base) => (base.evaluate_on(&mitigated)?, None),
        None => {
            let o = run_pipeline(&mitigated, &cfg.windowing, &cfg.classifier)?;
            (o.report, Some(o.trained))
        }
    };
    let axes = trained
        .as_ref()
        .or(fixed)
        .map(|t| t.selection.axes.clone())
        .unwrap_or_default();
    Ok(Cell {
        report,
        trained,
        axes,
        runtime_s: if cfg.timing { start.elapsed().as_secs_f64() } else { 0.0 },
    })
}

fn cell_dir_name(index: usize, chain: &MitigationChain) -> String {
    format!("{index:03}-{}", chain.label())
}

/// `sweep`: one dataset, every mitigation chain in `cfg.mitigations`, one
/// row per chain. Cells run in parallel; with `out`, each writes into its
/// own `cells/<index>-<label>/` directory and `sweep.csv` is written once
/// all have finished.
pub fn cmd_sweep(cfg: &ExperimentConfig, opts: SweepOptions, out: Option<&Path>) -> Result<SweepResult> {
    cfg.validate()?;
    let run = || -> Result<SweepResult> {
        let ds = generate(cfg)?;
        let rate = cfg.sampling()?.actual_rate;
        let fixed = if opts.fixed_model && !cfg.mitigations.is_empty() {
            Some(train_pipeline(&ds, &cfg.windowing, &cfg.classifier)?)
        } else {
            None
        };
        let cells: Vec<Cell> = cfg
            .mitigations
            .par_iter()
            .enumerate()
            .map(|(i, chain)| {
                let cell = run_cell(&ds, chain, cfg, fixed.as_ref())?;
                if let Some(dir) = out {
                    let dir = dir.join("cells").join(cell_dir_name(i, chain));
                    fs::create_dir_all(&dir)?;
                    write_json(&dir.join("mitigation.json"), chain)?;
                    write_json(&dir.join("report.json"), &cell.report)?;
                    fs::write(dir.join("report.csv"), cell.report.to_csv())?;
                    if let Some(t) = &cell.trained {
                        write_json(&dir.join("selection.json"), &t.selection)?;
                    }
                }
                Ok(cell)
            })
            .collect::<Result<_>>()?;
        let rows = cfg
            .mitigations
            .iter()
            .zip(cells)
            .map(|(chain, cell)| SweepRow {
                mitigation: chain.label(),
                bandwidth_hz: chain.bandwidth(rate),
                accuracy: cell.report.accuracy,
                axes: cell.axes,
                runtime_s: cell.runtime_s,
            })
            .collect();
        Ok(SweepResult { rows })
    };
    let result = match opts.jobs {
        Some(0) => return Err(Error::invalid("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("sweep.csv"), result.to_csv())?;
    }
    Ok(result)
}

/// Inputs of the `plan` subcommand when given as a JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    /// Defaults to the eight touchtone frequencies.
    #[serde(default)]
    pub sensitive: Option<Vec<f64>>,
    pub cutoff: f64,
    pub candidates: Vec<f64>,
}

/// `plan`: the sampling-rate planner table, optionally written as CSV.
pub fn cmd_plan(
    sensitive: Option<&[f64]>,
    cutoff: f64,
    candidates: &[f64],
    out: Option<&Path>,
) -> Result<SamplingPlan> {
    let dtmf = ToneTable::standard().all_frequencies();
    let plan = plan_sampling_rate(sensitive.unwrap_or(&dtmf), cutoff, candidates)?;
    if let Some(path) = out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, plan.to_csv())?;
    }
    Ok(plan)
}

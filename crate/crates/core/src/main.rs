use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use toneleak::classifier::GbtHyperparams;
use toneleak::features::WindowingParams;
use toneleak::harness::{
    cmd_gen, cmd_mitigate, cmd_plan, cmd_sweep, cmd_train_eval, ExperimentConfig, PlanConfig,
    SweepOptions,
};
use toneleak::mitigation::MitigationChain;
use toneleak::{Error, Result};

#[derive(Parser)]
#[command(name = "toneleak", version, about = "Touchtone leakage into motion sensors: simulate, attack, mitigate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a labelled dataset and write it as CSV recordings plus a manifest.
    Gen {
        #[arg(long)]
        config: PathBuf,
        /// Overrides dataset.master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a mitigation chain to every recording of a dataset.
    Mitigate {
        #[arg(long)]
        input: PathBuf,
        /// JSON file holding one mitigation step or an array of steps.
        #[arg(long, conflicts_with = "mitigation", required_unless_present = "mitigation")]
        config: Option<PathBuf>,
        /// Inline JSON, e.g. '{"kind":"downsample","factor":4}'.
        #[arg(long)]
        mitigation: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select axes, train on the training split and report test accuracy.
    TrainEval {
        #[arg(long)]
        input: PathBuf,
        /// Experiment config supplying `windowing` and `classifier`; defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides classifier.seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate every mitigation chain listed in the config; writes sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides dataset.master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Reuse the model trained on unmitigated data for every cell.
        #[arg(long)]
        fixed_model: bool,
    },
    /// Count attenuable aliases per candidate sampling rate.
    Plan {
        /// JSON file with `cutoff`, `candidates` and optional `sensitive`.
        #[arg(long, conflicts_with_all = ["cutoff", "candidates"])]
        config: Option<PathBuf>,
        /// Low-pass cutoff in Hz.
        #[arg(long, required_unless_present = "config")]
        cutoff: Option<f64>,
        /// Comma-separated candidate rates in Hz.
        #[arg(long, value_delimiter = ',', required_unless_present = "config")]
        candidates: Vec<f64>,
        /// Comma-separated sensitive frequencies; defaults to the touchtone set.
        #[arg(long, value_delimiter = ',')]
        sensitive: Option<Vec<f64>>,
        /// CSV destination; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_config_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

fn out_dir(out: Option<PathBuf>, cfg: &ExperimentConfig) -> Result<PathBuf> {
    out.or_else(|| cfg.output.clone())
        .ok_or_else(|| Error::InvalidArgument("no --out given and the config sets no `output`".into()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.dataset.master_seed = s;
            }
            let out = out_dir(out, &cfg)?;
            let m = cmd_gen(&cfg, &out)?;
            println!("wrote {} recordings to {}", m.recordings.len(), out.display());
        }
        Command::Mitigate {
            input,
            config,
            mitigation,
            out,
        } => {
            let text = match (config, mitigation) {
                (Some(path), _) => read_config_text(&path)?,
                (None, Some(inline)) => inline,
                (None, None) => unreachable!("clap requires one of --config/--mitigation"),
            };
            let chain: MitigationChain = serde_json::from_str(&text)?;
            let m = cmd_mitigate(&input, &chain, &out)?;
            println!(
                "applied {} to {} recordings in {}",
                chain.label(),
                m.recordings.len(),
                out.display()
            );
        }
        Command::TrainEval {
            input,
            config,
            seed,
            out,
        } => {
            let (windowing, mut hp) = match config {
                Some(path) => {
                    let cfg = ExperimentConfig::load(&path)?;
                    (cfg.windowing, cfg.classifier)
                }
                None => (WindowingParams::default(), GbtHyperparams::default()),
            };
            if let Some(s) = seed {
                hp.seed = s;
            }
            let o = cmd_train_eval(&input, &windowing, &hp, out.as_deref())?;
            let axes: Vec<&str> = o.trained.selection.axes.iter().map(|a| a.name()).collect();
            println!("accuracy {:.4} with axes {}", o.report.accuracy, axes.join("+"));
        }
        Command::Sweep {
            config,
            seed,
            out,
            jobs,
            fixed_model,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.dataset.master_seed = s;
            }
            let out = out_dir(out, &cfg)?;
            let r = cmd_sweep(&cfg, SweepOptions { jobs, fixed_model }, Some(&out))?;
            print!("{}", r.to_csv());
        }
        Command::Plan {
            config,
            cutoff,
            candidates,
            sensitive,
            out,
        } => {
            let pc = match config {
                Some(path) => serde_json::from_str::<PlanConfig>(&read_config_text(&path)?)?,
                None => PlanConfig {
                    sensitive,
                    cutoff: cutoff.expect("clap requires --cutoff"),
                    candidates,
                },
            };
            let plan = cmd_plan(pc.sensitive.as_deref(), pc.cutoff, &pc.candidates, out.as_deref())?;
            if out.is_none() {
                print!("{}", plan.to_csv());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

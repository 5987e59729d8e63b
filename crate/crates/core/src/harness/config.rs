use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::GbtHyperparams;
use crate::error::{Error, Result};
use crate::features::WindowingParams;
use crate::mitigation::MitigationChain;
use crate::sampling::SamplingConfig;
use crate::sensor_sim::{make_default_model, Preset, SensorModel};

fn default_rate() -> f64 {
    400.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub preset: Preset,
    #[serde(default)]
    pub seed: u64,
    /// Nominal sensor rate in Hz.
    #[serde(default = "default_rate")]
    pub rate: f64,
    /// Measured rate if it differs from the nominal one.
    #[serde(default)]
    pub actual_rate: Option<f64>,
}

fn default_reps() -> usize {
    50
}

fn default_duration() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default = "default_reps")]
    pub reps: usize,
    /// Seconds per recording.
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default)]
    pub master_seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            reps: default_reps(),
            duration: default_duration(),
            master_seed: 0,
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub dataset: DatasetConfig,
    /// Sweep grid; each entry is one step object or an array of steps.
    #[serde(default)]
    pub mitigations: Vec<MitigationChain>,
    #[serde(default)]
    pub windowing: WindowingParams,
    #[serde(default)]
    pub classifier: GbtHyperparams,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Record wall-clock runtimes in sweep output. Disable for
    /// byte-reproducible CSVs.
    #[serde(default = "yes")]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(model: ModelConfig) -> Self {
        ExperimentConfig {
            model,
            dataset: DatasetConfig::default(),
            mitigations: Vec::new(),
            windowing: WindowingParams::default(),
            classifier: GbtHyperparams::default(),
            output: None,
            timing: true,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.sampling()?;
        if self.dataset.reps < 1 {
            return Err(Error::invalid("dataset.reps must be at least 1"));
        }
        if !(self.dataset.duration > 0.0) || !self.dataset.duration.is_finite() {
            return Err(Error::invalid("dataset.duration must be positive"));
        }
        self.windowing.validate()?;
        self.classifier.validate()?;
        self.mitigations.iter().try_for_each(MitigationChain::validate)
    }

    pub fn sampling(&self) -> Result<SamplingConfig> {
        SamplingConfig::with_actual(
            self.model.rate,
            self.model.actual_rate.unwrap_or(self.model.rate),
        )
    }

    pub fn sensor_model(&self) -> Result<SensorModel> {
        Ok(make_default_model(self.model.preset, self.model.seed)?.with_sampling(self.sampling()?))
    }
}

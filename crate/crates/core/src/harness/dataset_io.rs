//! On-disk dataset layout: `manifest.json` plus `recordings/NNNN.csv`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dtmf::ToneId;
use crate::error::{Error, Result};
use crate::mitigation::MitigationConfig;
use crate::sampling::DiscreteSignal;
use crate::sensor_sim::{Axis, Dataset, Recording, RecordingMeta};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RECORDINGS_DIR: &str = "recordings";
const HEADER: &str = "t,ax,ay,az,gx,gy,gz";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// Relative to the dataset directory.
    pub path: String,
    pub label: ToneId,
    pub split: Split,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub preset: String,
    pub model_seed: u64,
    pub master_seed: u64,
    pub duration: f64,
    /// Every mitigation step applied since generation, in order.
    pub mitigation_chain: Vec<MitigationConfig>,
    pub recordings: Vec<ManifestEntry>,
}

/// Text of one recording file.
pub fn recording_to_csv(rec: &Recording) -> String {
    let n = rec.len();
    let mut out = String::with_capacity(n * 120);
    let _ = writeln!(
        out,
        "# rate={} label={} seed={}",
        rec.rate(),
        rec.label,
        rec.meta.seed
    );
    out.push_str(HEADER);
    out.push('\n');
    let t0 = rec.axis(Axis::Ax);
    for k in 0..n {
        let _ = write!(out, "{}", t0.time(k));
        for a in Axis::ALL {
            let _ = write!(out, ",{}", rec.axis(a).samples()[k]);
        }
        out.push('\n');
    }
    out
}

pub fn recording_from_csv(text: &str, origin: &Path, meta: RecordingMeta) -> Result<Recording> {
    let bad = |reason: String| Error::data(origin, reason);
    let mut lines = text.lines();
    let comment = lines
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .ok_or_else(|| bad("missing `# rate=… label=… seed=…` line".into()))?;
    let (mut rate, mut label, mut seed) = (None, None, None);
    for (key, value) in comment.split_whitespace().filter_map(|kv| kv.split_once('=')) {
        match key {
            "rate" => rate = value.parse::<f64>().ok(),
            "label" => label = value.parse::<ToneId>().ok(),
            "seed" => seed = value.parse::<u64>().ok(),
            _ => {}
        }
    }
    let rate = rate.ok_or_else(|| bad("missing or bad rate".into()))?;
    let label = label.ok_or_else(|| bad("missing or bad label".into()))?;
    let seed = seed.ok_or_else(|| bad("missing or bad seed".into()))?;
    if lines.next().map(str::trim) != Some(HEADER) {
        return Err(bad(format!("expected header {HEADER:?}")));
    }
    let mut start = None;
    let mut cols: [Vec<f64>; 6] = Default::default();
    for (row, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("row {row}: {e}")))?;
        if values.len() != 7 {
            return Err(bad(format!("row {row}: expected 7 columns, got {}", values.len())));
        }
        start.get_or_insert(values[0]);
        for (c, v) in cols.iter_mut().zip(&values[1..]) {
            c.push(*v);
        }
    }
    let start = start.ok_or_else(|| bad("no samples".into()))?;
    let axes = cols
        .into_iter()
        .map(|c| DiscreteSignal::new(c, rate, start))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| bad(e.to_string()))?;
    Recording::new(label, axes, RecordingMeta { seed, ..meta }).map_err(|e| bad(e.to_string()))
}

fn rel_path(i: usize) -> String {
    format!("{RECORDINGS_DIR}/{i:04}.csv")
}

/// Writes `ds` under `dir` and returns the manifest it wrote.
pub fn write_dataset(
    dir: &Path,
    ds: &Dataset,
    preset: &str,
    model_seed: u64,
    master_seed: u64,
    chain: Vec<MitigationConfig>,
) -> Result<Manifest> {
    fs::create_dir_all(dir.join(RECORDINGS_DIR))?;
    let mut split = vec![Split::Train; ds.recordings.len()];
    for &i in &ds.test {
        split[i] = Split::Test;
    }
    let mut entries = Vec::with_capacity(ds.recordings.len());
    for (i, rec) in ds.recordings.iter().enumerate() {
        let path = rel_path(i);
        fs::write(dir.join(&path), recording_to_csv(rec))?;
        entries.push(ManifestEntry {
            path,
            label: rec.label,
            split: split[i],
            seed: rec.meta.seed,
        });
    }
    let manifest = Manifest {
        preset: preset.to_string(),
        model_seed,
        master_seed,
        duration: ds.recordings.first().map_or(0.0, |r| r.meta.duration),
        mitigation_chain: chain,
        recordings: entries,
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path: PathBuf = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::data(&path, e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| Error::data(&path, e.to_string()))
}

/// Loads a dataset directory, checking that every referenced recording
/// exists and matches its manifest entry.
pub fn read_dataset(dir: &Path) -> Result<(Dataset, Manifest)> {
    let manifest = read_manifest(dir)?;
    let mut recordings = Vec::with_capacity(manifest.recordings.len());
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, e) in manifest.recordings.iter().enumerate() {
        let path = dir.join(&e.path);
        let text = fs::read_to_string(&path).map_err(|err| Error::data(&path, err.to_string()))?;
        let meta = RecordingMeta {
            model_id: manifest.preset.clone(),
            seed: e.seed,
            duration: manifest.duration,
        };
        let rec = recording_from_csv(&text, &path, meta)?;
        if rec.label != e.label || rec.meta.seed != e.seed {
            return Err(Error::data(&path, "label or seed disagrees with manifest"));
        }
        match e.split {
            Split::Train => train.push(i),
            Split::Test => test.push(i),
        }
        recordings.push(rec);
    }
    if recordings.is_empty() {
        return Err(Error::data(dir, "dataset has no recordings"));
    }
    let ds = Dataset::new(recordings, train, test).map_err(|e| Error::data(dir, e.to_string()))?;
    Ok((ds, manifest))
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::gbt::{FeatureMatrix, TreeEnsembleModel, NUM_CLASSES};
use crate::dtmf::ToneId;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub total: usize,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// `None` for classes absent from the test set.
    pub per_class: Vec<Option<f64>>,
}

impl EvalReport {
    pub fn from_predictions(truth: &[ToneId], predicted: &[ToneId]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::invalid("prediction and label counts differ"));
        }
        if truth.is_empty() {
            return Err(Error::invalid("cannot evaluate on an empty test set"));
        }
        let mut confusion = vec![vec![0usize; NUM_CLASSES]; NUM_CLASSES];
        for (t, p) in truth.iter().zip(predicted) {
            confusion[t.index()][p.index()] += 1;
        }
        let correct: usize = (0..NUM_CLASSES).map(|c| confusion[c][c]).sum();
        let per_class = confusion
            .iter()
            .enumerate()
            .map(|(c, row)| {
                let n: usize = row.iter().sum();
                (n > 0).then(|| row[c] as f64 / n as f64)
            })
            .collect();
        Ok(EvalReport {
            accuracy: correct as f64 / truth.len() as f64,
            total: truth.len(),
            confusion,
            per_class,
        })
    }

    /// One row per true class: count, correct, accuracy, then predicted counts.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,count,correct,accuracy");
        for t in ToneId::all() {
            let _ = write!(out, ",pred_{t}");
        }
        out.push('\n');
        for (c, row) in self.confusion.iter().enumerate() {
            let n: usize = row.iter().sum();
            let acc = self.per_class[c].map_or(String::new(), |a| a.to_string());
            let _ = write!(
                out,
                "{},{n},{},{acc}",
                ToneId::from_index(c).expect("class index"),
                row[c]
            );
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "all,{},,{}", self.total, self.accuracy);
        out
    }
}

pub fn evaluate(model: &TreeEnsembleModel, x: &FeatureMatrix, labels: &[ToneId]) -> Result<EvalReport> {
    EvalReport::from_predictions(labels, &model.predict_matrix(x)?)
}

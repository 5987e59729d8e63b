//! Multiclass gradient-boosted regression trees with exact greedy splits.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{boosting_hessian, log_loss, softmax_into};
use crate::dtmf::ToneId;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::rng::{derive_seed, stream_rng};
use crate::sensor_sim::Axis;

pub const NUM_CLASSES: usize = ToneId::COUNT;
pub const MODEL_FORMAT: &str = "toneleak-gbt";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtHyperparams {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_child_weight: f64,
    /// Minimum loss reduction for a split.
    pub gamma: f64,
    pub colsample_bytree: f64,
    pub n_rounds: usize,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    pub seed: u64,
}

impl Default for GbtHyperparams {
    fn default() -> Self {
        GbtHyperparams {
            learning_rate: 0.2,
            max_depth: 5,
            min_child_weight: 3.0,
            gamma: 0.1,
            colsample_bytree: 0.5,
            n_rounds: 50,
            lambda: 1.0,
            seed: 0,
        }
    }
}

impl GbtHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::invalid(format!(
                "learning_rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.max_depth < 1 {
            return Err(Error::invalid("max_depth must be at least 1"));
        }
        if !(self.colsample_bytree > 0.0 && self.colsample_bytree <= 1.0) {
            return Err(Error::invalid(format!(
                "colsample_bytree must lie in (0, 1], got {}",
                self.colsample_bytree
            )));
        }
        if !(self.min_child_weight >= 0.0) || !(self.gamma >= 0.0) || !(self.lambda >= 0.0) {
            return Err(Error::invalid("min_child_weight, gamma and lambda must be non-negative"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Dense column-major design matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(Error::invalid("feature rows differ in length"));
        }
        let n = rows.len();
        let mut data = vec![0.0; n * cols];
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.as_ref().iter().enumerate() {
                data[j * n + i] = v;
            }
        }
        Ok(FeatureMatrix {
            rows: n,
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(row, j)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        weight: f64,
    },
}

impl TreeNode {
    pub fn eval<F: Fn(usize) -> f64>(&self, x: F) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x(*feature) < *threshold { left } else { right },
            }
        }
    }

    /// Number of split levels on the longest path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature,
                left,
                right,
                ..
            } => [Some(*feature), left.max_feature(), right.max_feature()]
                .into_iter()
                .flatten()
                .max(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsembleModel {
    pub format: String,
    pub version: u32,
    pub num_classes: usize,
    pub feature_count: usize,
    pub hyperparams: GbtHyperparams,
    /// Axes whose features the model consumes, in layout order.
    pub axes: Vec<Axis>,
    /// Mean training log-loss before boosting and after each round.
    pub loss_history: Vec<f64>,
    /// `trees[class][round]`.
    pub trees: Vec<Vec<TreeNode>>,
}

impl TreeEnsembleModel {
    pub fn validate(&self) -> Result<()> {
        if self.format != MODEL_FORMAT || self.version != MODEL_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model format {} v{}",
                self.format, self.version
            )));
        }
        if self.num_classes != NUM_CLASSES || self.trees.len() != NUM_CLASSES {
            return Err(Error::invalid("model must have one tree list per class"));
        }
        for tree in self.trees.iter().flatten() {
            if tree.max_feature().is_some_and(|f| f >= self.feature_count) {
                return Err(Error::invalid("tree references a feature out of range"));
            }
            if tree.depth() > self.hyperparams.max_depth {
                return Err(Error::invalid("tree deeper than max_depth"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TreeEnsembleModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.feature_count {
            return Err(Error::invalid(format!(
                "feature length {len} does not match model ({})",
                self.feature_count
            )));
        }
        Ok(())
    }

    /// Raw additive scores, one per class.
    pub fn predict_scores(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.check_len(features.len())?;
        Ok(self
            .trees
            .iter()
            .map(|ts| ts.iter().map(|t| t.eval(|j| features[j])).sum())
            .collect())
    }

    pub fn predict_proba(&self, features: &[f64]) -> Result<Vec<f64>> {
        let s = self.predict_scores(features)?;
        let mut p = vec![0.0; s.len()];
        softmax_into(&s, &mut p);
        Ok(p)
    }

    /// Highest-scoring class; ties go to the lowest index.
    pub fn predict(&self, features: &[f64]) -> Result<ToneId> {
        let s = self.predict_scores(features)?;
        let best = s
            .iter()
            .enumerate()
            .fold(0, |b, (k, &v)| if v > s[b] { k } else { b });
        Ok(ToneId::from_index(best).expect("class index within range"))
    }

    pub fn predict_matrix(&self, x: &FeatureMatrix) -> Result<Vec<ToneId>> {
        self.check_len(x.cols())?;
        (0..x.rows()).map(|i| self.predict(&x.row(i))).collect()
    }
}

/// Row indices of every column sorted by value.
struct Presorted {
    rows: usize,
    order: Vec<u32>,
    values: Vec<f64>,
}

impl Presorted {
    fn new(x: &FeatureMatrix) -> Self {
        let n = x.rows();
        let mut order = Vec::with_capacity(n * x.cols());
        let mut values = Vec::with_capacity(n * x.cols());
        let mut idx: Vec<u32> = Vec::with_capacity(n);
        for j in 0..x.cols() {
            let col = x.column(j);
            idx.clear();
            idx.extend(0..n as u32);
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            order.extend_from_slice(&idx);
            values.extend(idx.iter().map(|&i| col[i as usize]));
        }
        Presorted {
            rows: n,
            order,
            values,
        }
    }

    fn column(&self, j: usize) -> (&[u32], &[f64]) {
        let r = j * self.rows..(j + 1) * self.rows;
        (&self.order[r.clone()], &self.values[r])
    }
}

const NONE: u32 = u32::MAX;

enum Build {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Copy)]
struct Scan {
    gl: f64,
    hl: f64,
    last: f64,
    seen: bool,
}

#[derive(Clone, Copy)]
struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn to_tree(arena: &[Option<Build>], at: usize) -> TreeNode {
    match arena[at].as_ref().expect("every node finalised") {
        Build::Leaf(w) => TreeNode::Leaf { weight: *w },
        Build::Split {
            feature,
            threshold,
            left,
            right,
        } => TreeNode::Split {
            feature: *feature,
            threshold: *threshold,
            left: Box::new(to_tree(arena, *left)),
            right: Box::new(to_tree(arena, *right)),
        },
    }
}

/// Grows one regression tree level by level. Each level makes a single pass
/// over every sampled column, accumulating left-side gradient sums per node.
fn build_tree(
    x: &FeatureMatrix,
    pre: &Presorted,
    g: &[f64],
    h: &[f64],
    features: &[usize],
    hp: &GbtHyperparams,
) -> TreeNode {
    let n = x.rows();
    let lambda = hp.lambda;
    let mcw = hp.min_child_weight;
    let mut arena: Vec<Option<Build>> = vec![None];
    let mut slot_node: Vec<usize> = vec![0];
    let mut node_of: Vec<u32> = vec![0; n];

    for depth in 0.. {
        let slots = slot_node.len();
        let mut gsum = vec![0.0; slots];
        let mut hsum = vec![0.0; slots];
        for i in 0..n {
            let s = node_of[i];
            if s != NONE {
                gsum[s as usize] += g[i];
                hsum[s as usize] += h[i];
            }
        }
        let active: Vec<bool> = (0..slots)
            .map(|s| depth < hp.max_depth && hsum[s] >= 2.0 * mcw)
            .collect();

        let mut best = vec![
            Best {
                gain: f64::NEG_INFINITY,
                feature: 0,
                threshold: 0.0,
            };
            slots
        ];
        if active.iter().any(|&a| a) {
            let mut scan = vec![
                Scan {
                    gl: 0.0,
                    hl: 0.0,
                    last: 0.0,
                    seen: false,
                };
                slots
            ];
            let parent: Vec<f64> = (0..slots)
                .map(|s| gsum[s] * gsum[s] / (hsum[s] + lambda))
                .collect();
            for &j in features {
                for st in scan.iter_mut() {
                    st.gl = 0.0;
                    st.hl = 0.0;
                    st.seen = false;
                }
                let (order, values) = pre.column(j);
                for (&i, &v) in order.iter().zip(values) {
                    let s = node_of[i as usize];
                    if s == NONE || !active[s as usize] {
                        continue;
                    }
                    let s = s as usize;
                    let st = &mut scan[s];
                    if st.seen && v > st.last && st.hl >= mcw && hsum[s] - st.hl >= mcw {
                        let gr = gsum[s] - st.gl;
                        let hr = hsum[s] - st.hl;
                        let gain = 0.5
                            * (st.gl * st.gl / (st.hl + lambda) + gr * gr / (hr + lambda)
                                - parent[s]);
                        if gain > best[s].gain {
                            let mid = 0.5 * (st.last + v);
                            best[s] = Best {
                                gain,
                                feature: j,
                                threshold: if mid > st.last { mid } else { v },
                            };
                        }
                    }
                    st.gl += g[i as usize];
                    st.hl += h[i as usize];
                    st.last = v;
                    st.seen = true;
                }
            }
        }

        // Finalise this level and lay out the next one.
        let mut next_slot = vec![NONE; slots * 2];
        let mut next_nodes = Vec::new();
        for s in 0..slots {
            let b = best[s];
            if active[s] && b.gain >= hp.gamma && b.gain > 0.0 {
                let (l, r) = (arena.len(), arena.len() + 1);
                arena.push(None);
                arena.push(None);
                arena[slot_node[s]] = Some(Build::Split {
                    feature: b.feature,
                    threshold: b.threshold,
                    left: l,
                    right: r,
                });
                next_slot[2 * s] = next_nodes.len() as u32;
                next_nodes.push(l);
                next_slot[2 * s + 1] = next_nodes.len() as u32;
                next_nodes.push(r);
            } else {
                let w = -gsum[s] / (hsum[s] + lambda) * hp.learning_rate;
                arena[slot_node[s]] = Some(Build::Leaf(w));
            }
        }
        if next_nodes.is_empty() {
            break;
        }
        for (i, slot) in node_of.iter_mut().enumerate() {
            if *slot == NONE {
                continue;
            }
            let s = *slot as usize;
            *slot = match arena[slot_node[s]] {
                Some(Build::Split {
                    feature, threshold, ..
                }) => {
                    if x.get(i, feature) < threshold {
                        next_slot[2 * s]
                    } else {
                        next_slot[2 * s + 1]
                    }
                }
                _ => NONE,
            };
        }
        slot_node = next_nodes;
    }
    to_tree(&arena, 0)
}

fn sample_columns(hp: &GbtHyperparams, cols: usize, tree_id: u64) -> Vec<usize> {
    let take = ((hp.colsample_bytree * cols as f64).ceil() as usize).clamp(1, cols);
    if take == cols {
        return (0..cols).collect();
    }
    let mut rng = stream_rng(hp.seed, tree_id);
    let mut picked = index::sample(&mut rng, cols, take).into_vec();
    picked.sort_unstable();
    picked
}

/// Fits the ensemble to rows of `x` labelled by `labels`.
pub fn train(x: &FeatureMatrix, labels: &[ToneId], hp: &GbtHyperparams) -> Result<TreeEnsembleModel> {
    hp.validate()?;
    if labels.len() != x.rows() {
        return Err(Error::invalid(format!(
            "{} labels for {} feature rows",
            labels.len(),
            x.rows()
        )));
    }
    if x.cols() == 0 {
        return Err(Error::invalid("feature vectors are empty"));
    }
    let first = labels
        .first()
        .ok_or_else(|| Error::DegenerateTraining("no training rows".into()))?;
    if labels.iter().all(|l| l == first) {
        return Err(Error::DegenerateTraining(format!(
            "only class {first} is present"
        )));
    }

    let n = x.rows();
    let k = NUM_CLASSES;
    let pre = Presorted::new(x);
    let y: Vec<usize> = labels.iter().map(|l| l.index()).collect();
    let mut scores = vec![0.0; n * k];
    let mean_loss = |scores: &[f64]| {
        (0..n)
            .map(|i| log_loss(&scores[i * k..(i + 1) * k], y[i]))
            .sum::<f64>()
            / n as f64
    };
    let mut loss_history = vec![mean_loss(&scores)];
    let mut trees: Vec<Vec<TreeNode>> = (0..k).map(|_| Vec::with_capacity(hp.n_rounds)).collect();
    let mut p = vec![0.0; k];
    let mut grad = vec![vec![0.0; n]; k];
    let mut hess = vec![vec![0.0; n]; k];

    for round in 0..hp.n_rounds {
        for i in 0..n {
            softmax_into(&scores[i * k..(i + 1) * k], &mut p);
            for c in 0..k {
                grad[c][i] = p[c] - if c == y[i] { 1.0 } else { 0.0 };
                hess[c][i] = boosting_hessian(p[c]);
            }
        }
        let round_trees: Vec<TreeNode> = (0..k)
            .into_par_iter()
            .map(|c| {
                let cols = sample_columns(hp, x.cols(), (round * k + c) as u64);
                build_tree(x, &pre, &grad[c], &hess[c], &cols, hp)
            })
            .collect();
        for (c, tree) in round_trees.into_iter().enumerate() {
            for i in 0..n {
                scores[i * k + c] += tree.eval(|j| x.get(i, j));
            }
            trees[c].push(tree);
        }
        loss_history.push(mean_loss(&scores));
    }

    Ok(TreeEnsembleModel {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        num_classes: k,
        feature_count: x.cols(),
        hyperparams: hp.clone(),
        axes: Vec::new(),
        loss_history,
        trees,
    })
}

/// [`train`] on labelled feature vectors; the model records their axes.
pub fn fit(vectors: &[FeatureVector], hp: &GbtHyperparams) -> Result<TreeEnsembleModel> {
    let labels = vectors
        .iter()
        .map(|v| v.label.ok_or_else(|| Error::invalid("training vector without label")))
        .collect::<Result<Vec<_>>>()?;
    let x = FeatureMatrix::from_rows(&vectors.iter().map(|v| &v.values[..]).collect::<Vec<_>>())?;
    let mut model = train(&x, &labels, hp)?;
    model.axes = vectors.first().map(|v| v.layout.axes.clone()).unwrap_or_default();
    Ok(model)
}

/// Seed for a model trained inside a larger procedure.
pub fn sub_seed(hp: &GbtHyperparams, stream: u64) -> GbtHyperparams {
    hp.clone().with_seed(derive_seed(hp.seed, stream))
}

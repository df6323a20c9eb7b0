//! Random forest of binned CART trees with Gini impurity.
//!
//! Each feature is discretized once per training set: thresholds sit at the
//! midpoints between consecutive distinct training values (or between quantile
//! cut points when there are more than `max_bins` distinct values). A split
//! sends `x <= threshold` left.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed::{self, Rng};
use crate::{Error, Result};

pub const MODEL_FORMAT: &str = "torsellab-forest";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub max_features: usize,
    pub max_bins: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 16,
            min_leaf: 5,
            max_features: 3,
            max_bins: 256,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.min_leaf == 0 || self.max_features == 0 || self.max_bins < 2 {
            return Err(Error::Config(format!("invalid forest parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Binary,
    Multiclass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: usize,
        counts: Vec<u32>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn leaf(&self, x: &[f64]) -> &Node {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                leaf => return leaf,
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        match self.leaf(x) {
            Node::Leaf { class, .. } => *class,
            Node::Split { .. } => unreachable!("walk stops at leaves"),
        }
    }

    /// Sample counts of every leaf, for invariant checks.
    pub fn leaf_sizes(&self) -> Vec<u32> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { counts, .. } => Some(counts.iter().sum()),
                _ => None,
            })
            .collect()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format: String,
    pub version: u32,
    /// Labelling threshold the model was trained for, when binary.
    pub tau: Option<f64>,
    pub task: Task,
    pub n_features: usize,
    /// Original label of each class index.
    pub classes: Vec<u64>,
    pub params: ForestParams,
    pub seed: u64,
    pub trees: Vec<Tree>,
}

/// Per-feature thresholds and the binned training matrix (column-major).
struct Binned {
    thresholds: Vec<Vec<f64>>,
    bins: Vec<Vec<u16>>,
}

fn bin_features(x: &[Vec<f64>], n_features: usize, max_bins: usize) -> Binned {
    let mut thresholds = Vec::with_capacity(n_features);
    let mut bins = Vec::with_capacity(n_features);
    for f in 0..n_features {
        let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        let cuts: Vec<f64> = if vals.len() <= max_bins {
            vals.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect()
        } else {
            let mut cuts: Vec<f64> = (1..max_bins)
                .map(|b| {
                    let i = b * vals.len() / max_bins;
                    (vals[i - 1] + vals[i]) / 2.0
                })
                .collect();
            cuts.dedup();
            cuts
        };
        bins.push(
            x.iter()
                .map(|r| cuts.partition_point(|&t| t < r[f]) as u16)
                .collect(),
        );
        thresholds.push(cuts);
    }
    Binned { thresholds, bins }
}

fn gini(counts: &[u32], total: u32) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn majority(counts: &[u32]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

struct Builder<'a> {
    binned: &'a Binned,
    y: &'a [usize],
    n_classes: usize,
    params: &'a ForestParams,
    nodes: Vec<Node>,
}

struct SplitChoice {
    feature: usize,
    bin: usize,
    impurity: f64,
}

impl Builder<'_> {
    fn counts(&self, idx: &[u32]) -> Vec<u32> {
        let mut c = vec![0u32; self.n_classes];
        for &i in idx {
            c[self.y[i as usize]] += 1;
        }
        c
    }

    fn best_split_on(&self, f: usize, idx: &[u32], parent: &[u32]) -> Option<SplitChoice> {
        let n_bins = self.binned.thresholds[f].len() + 1;
        if n_bins < 2 {
            return None;
        }
        let k = self.n_classes;
        let col = &self.binned.bins[f];
        let mut hist = vec![0u32; n_bins * k];
        for &i in idx {
            hist[col[i as usize] as usize * k + self.y[i as usize]] += 1;
        }
        let total = idx.len() as u32;
        let min_leaf = self.params.min_leaf as u32;
        let mut left = vec![0u32; k];
        let mut n_left = 0u32;
        let mut best: Option<SplitChoice> = None;
        for b in 0..n_bins - 1 {
            let row = &hist[b * k..(b + 1) * k];
            let added: u32 = row.iter().sum();
            if added == 0 {
                continue;
            }
            for (l, r) in left.iter_mut().zip(row) {
                *l += r;
            }
            n_left += added;
            let n_right = total - n_left;
            if n_left < min_leaf {
                continue;
            }
            if n_right < min_leaf {
                break;
            }
            let right: Vec<u32> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
            let imp = (n_left as f64 * gini(&left, n_left)
                + n_right as f64 * gini(&right, n_right))
                / total as f64;
            if best.as_ref().is_none_or(|s| imp < s.impurity) {
                best = Some(SplitChoice {
                    feature: f,
                    bin: b,
                    impurity: imp,
                });
            }
        }
        best
    }

    fn build(&mut self, idx: &mut [u32], depth: usize, rng: &mut Rng) -> usize {
        let counts = self.counts(idx);
        let total = idx.len() as u32;
        let here = self.nodes.len();
        let parent_gini = gini(&counts, total);
        let stop = depth >= self.params.max_depth
            || idx.len() < 2 * self.params.min_leaf
            || parent_gini == 0.0;
        let split = if stop {
            None
        } else {
            let n_features = self.binned.bins.len();
            let mut order: Vec<usize> = (0..n_features).collect();
            order.shuffle(rng);
            let mut best: Option<SplitChoice> = None;
            for (tried, &f) in order.iter().enumerate() {
                if tried >= self.params.max_features && best.is_some() {
                    break;
                }
                if let Some(s) = self.best_split_on(f, idx, &counts) {
                    if best.as_ref().is_none_or(|b| s.impurity < b.impurity) {
                        best = Some(s);
                    }
                }
            }
            best.filter(|s| s.impurity < parent_gini)
        };
        let Some(s) = split else {
            self.nodes.push(Node::Leaf {
                class: majority(&counts),
                counts,
            });
            return here;
        };
        self.nodes.push(Node::Leaf {
            class: 0,
            counts: Vec::new(),
        });
        let col = &self.binned.bins[s.feature];
        let mut mid = 0;
        for j in 0..idx.len() {
            if (col[idx[j] as usize] as usize) <= s.bin {
                idx.swap(j, mid);
                mid += 1;
            }
        }
        let (l, r) = idx.split_at_mut(mid);
        let left = self.build(l, depth + 1, rng);
        let right = self.build(r, depth + 1, rng);
        self.nodes[here] = Node::Split {
            feature: s.feature,
            threshold: self.binned.thresholds[s.feature][s.bin],
            left,
            right,
        };
        here
    }
}

/// Maps raw labels to class indices in ascending label order.
fn index_labels(labels: &[u64]) -> (Vec<u64>, Vec<usize>) {
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let y = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label drawn from classes"))
        .collect();
    (classes, y)
}

/// Trains a forest. `labels` are arbitrary class labels; a binary task uses
/// 0 (slow) and 1 (fast).
pub fn train_forest(
    x: &[Vec<f64>],
    labels: &[u64],
    task: Task,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    params.validate()?;
    if x.len() != labels.len() {
        return Err(Error::Model("feature and label counts differ".into()));
    }
    if x.len() < 10 {
        return Err(Error::Degenerate(format!(
            "need at least 10 training samples, got {}",
            x.len()
        )));
    }
    let n_features = x[0].len();
    if n_features == 0 || x.iter().any(|r| r.len() != n_features) {
        return Err(Error::Model("ragged or empty feature rows".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Model("non-finite feature value".into()));
    }
    let (mut classes, y) = index_labels(labels);
    if classes.len() < 2 {
        return Err(Error::Degenerate(
            "training labels contain a single class".into(),
        ));
    }
    if task == Task::Binary {
        if classes != [0, 1] {
            return Err(Error::Model("binary labels must be 0 and 1".into()));
        }
        classes = vec![0, 1];
    }
    let binned = bin_features(x, n_features, params.max_bins);
    let n = x.len();
    let trees: Vec<Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed.wrapping_add(t as u64), &[seed::stream::FOREST]);
            let mut idx: Vec<u32> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n as u32)).collect()
            } else {
                (0..n as u32).collect()
            };
            let mut b = Builder {
                binned: &binned,
                y: &y,
                n_classes: classes.len(),
                params,
                nodes: Vec::new(),
            };
            b.build(&mut idx, 0, &mut rng);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(ForestModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        tau: None,
        task,
        n_features,
        classes,
        params: params.clone(),
        seed,
        trees,
    })
}

impl ForestModel {
    fn check_arity(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::Model(format!(
                "expected {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        Ok(())
    }

    /// Tree votes per class index.
    pub fn votes(&self, x: &[f64]) -> Result<Vec<u32>> {
        self.check_arity(x)?;
        let mut v = vec![0u32; self.classes.len()];
        for t in &self.trees {
            v[t.predict(x)] += 1;
        }
        Ok(v)
    }

    /// Majority-vote label (ties go to the smaller label).
    pub fn predict_label(&self, x: &[f64]) -> Result<u64> {
        Ok(self.classes[majority(&self.votes(x)?)])
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: ForestModel = serde_json::from_str(&text)?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model format {} v{}",
                m.format, m.version
            )));
        }
        Ok(m)
    }
}

/// Binary prediction: `(label, score)` with score the fraction of trees voting
/// for the positive class and label `score >= 0.5`.
pub fn predict_forest(model: &ForestModel, x: &[f64]) -> Result<(bool, f64)> {
    if model.task != Task::Binary {
        return Err(Error::Model(
            "binary prediction on a multiclass model".into(),
        ));
    }
    let v = model.votes(x)?;
    let score = v[1] as f64 / model.trees.len() as f64;
    Ok((score >= 0.5, score))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u64>) {
        let mut rng = seed::rng(seed, &[]);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let bw = rng.gen_range(100.0..3000.0f64).round();
            let asn = rng.gen_range(20000..20100) as f64;
            let cc = [6869.0, 8583.0, 7082.0][rng.gen_range(0..3)];
            x.push(vec![asn, cc, bw]);
            y.push((bw > 1000.0) as u64);
        }
        (x, y)
    }

    #[test]
    fn separable_set_is_learned() {
        let (x, y) = toy(600, 1);
        let m = train_forest(&x, &y, Task::Binary, &ForestParams::default(), 3).unwrap();
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(r, l)| predict_forest(&m, r).unwrap().0 == (**l == 1))
            .count();
        assert!(correct as f64 / x.len() as f64 >= 0.99);
        let (px, py) = toy(300, 2);
        let probe = px
            .iter()
            .zip(&py)
            .filter(|(r, l)| predict_forest(&m, r).unwrap().0 == (**l == 1))
            .count();
        assert!(probe as f64 / 300.0 >= 0.97);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (x, y) = toy(300, 4);
        let p = ForestParams {
            n_trees: 10,
            ..Default::default()
        };
        let a = train_forest(&x, &y, Task::Binary, &p, 9).unwrap();
        let b = train_forest(&x, &y, Task::Binary, &p, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn leaves_respect_min_leaf() {
        let (x, y) = toy(500, 5);
        let p = ForestParams {
            n_trees: 8,
            min_leaf: 7,
            ..Default::default()
        };
        let m = train_forest(&x, &y, Task::Binary, &p, 1).unwrap();
        assert_eq!(m.trees.len(), 8);
        for t in &m.trees {
            assert!(t.leaf_sizes().iter().all(|&s| s >= 7));
        }
    }

    #[test]
    fn single_tree_forest_votes_its_leaf() {
        let (x, y) = toy(200, 6);
        let p = ForestParams {
            n_trees: 1,
            ..Default::default()
        };
        let m = train_forest(&x, &y, Task::Binary, &p, 2).unwrap();
        for r in &x {
            let (label, score) = predict_forest(&m, r).unwrap();
            assert!(score == 0.0 || score == 1.0);
            assert_eq!(label, m.trees[0].predict(r) == 1);
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let (x, _) = toy(50, 7);
        let y = vec![1u64; 50];
        assert!(matches!(
            train_forest(&x, &y, Task::Binary, &ForestParams::default(), 0),
            Err(Error::Degenerate(_))
        ));
        let (x, y) = toy(50, 7);
        let m = train_forest(
            &x,
            &y,
            Task::Binary,
            &ForestParams {
                n_trees: 2,
                ..Default::default()
            },
            0,
        )
        .unwrap();
        assert!(predict_forest(&m, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn multiclass_labels_round_trip() {
        let mut rng = seed::rng(8, &[]);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..400 {
            let k = rng.gen_range(0..4u64);
            x.push(vec![k as f64 * 10.0 + rng.gen::<f64>(), rng.gen()]);
            y.push(30_000 + k);
        }
        let p = ForestParams {
            n_trees: 20,
            ..Default::default()
        };
        let m = train_forest(&x, &y, Task::Multiclass, &p, 1).unwrap();
        let acc = x
            .iter()
            .zip(&y)
            .filter(|(r, l)| m.predict_label(r).unwrap() == **l)
            .count();
        assert!(acc >= 390);
    }

    #[test]
    fn save_load_round_trip() {
        let (x, y) = toy(200, 9);
        let mut m = train_forest(
            &x,
            &y,
            Task::Binary,
            &ForestParams {
                n_trees: 5,
                ..Default::default()
            },
            4,
        )
        .unwrap();
        m.tau = Some(1.25);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("model.json");
        m.save(&p).unwrap();
        assert_eq!(ForestModel::load(&p).unwrap(), m);
    }
}

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::label::Label;
use crate::rng;
use crate::vectorize::SparseVector;

use super::{check_training_set, FitError, Prediction};

/// Lower bound on an out-of-bag vote weight.
pub const OOB_WEIGHT_FLOOR: f64 = 0.01;

/// Gini values closer than this are treated as equal when ranking splits.
const GINI_TIE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_estimators: usize,
    /// `None` grows trees until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    /// Features examined per node; `None` means `ceil(sqrt(V))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub weighted: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { n_estimators: 40, max_depth: None, max_features: None, bootstrap: true, weighted: false, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    /// `fraction` is the share of depressive training rows at the leaf.
    Leaf { label: Label, fraction: f64 },
}

/// Binary tree stored as a node array; the root is node 0.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf(&self, x: &SparseVector) -> (Label, f64) {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if x.get(feature) <= threshold { left } else { right };
                }
                Node::Leaf { label, fraction } => return (label, fraction),
            }
        }
    }

    pub fn predict(&self, x: &SparseVector) -> Label {
        self.leaf(x).0
    }

    /// Checks that every split points at existing, later nodes.
    pub fn is_well_formed(&self) -> bool {
        !self.nodes.is_empty()
            && self.nodes.iter().enumerate().all(|(i, n)| match *n {
                Node::Split { left, right, threshold, .. } => {
                    left > i && right > i && left < self.nodes.len() && right < self.nodes.len() && threshold.is_finite()
                }
                Node::Leaf { fraction, .. } => (0.0..=1.0).contains(&fraction),
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RFModel {
    pub trees: Vec<DecisionTree>,
    pub tree_weights: Vec<f64>,
    pub cfg: ForestConfig,
    pub n_features: usize,
}

fn gini(n0: f64, n1: f64) -> f64 {
    let n = n0 + n1;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (n0 / n, n1 / n);
    1.0 - p0 * p0 - p1 * p1
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub impurity: f64,
}

impl SplitChoice {
    /// Lower impurity wins; near-ties go to the lower feature, then the
    /// lower threshold.
    fn beats(&self, other: &SplitChoice) -> bool {
        if self.impurity < other.impurity - GINI_TIE {
            return true;
        }
        if self.impurity > other.impurity + GINI_TIE {
            return false;
        }
        (self.feature, self.threshold) < (other.feature, other.threshold)
    }
}

/// Best midpoint threshold for one feature given `(value, label)` pairs.
/// Returns `None` when the feature is constant.
fn best_threshold(feature: usize, mut values: Vec<(f64, Label)>) -> Option<SplitChoice> {
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = values.len() as f64;
    let total1 = values.iter().filter(|(_, l)| *l == Label::Depressive).count() as f64;
    let total0 = n - total1;
    let (mut l0, mut l1) = (0.0, 0.0);
    let mut best: Option<SplitChoice> = None;
    for k in 0..values.len() - 1 {
        match values[k].1 {
            Label::Depressive => l1 += 1.0,
            Label::NonDepressive => l0 += 1.0,
        }
        let (a, b) = (values[k].0, values[k + 1].0);
        if a == b {
            continue;
        }
        let nl = l0 + l1;
        let nr = n - nl;
        let impurity = (nl * gini(l0, l1) + nr * gini(total0 - l0, total1 - l1)) / n;
        let cand = SplitChoice { feature, threshold: a + (b - a) / 2.0, impurity };
        if best.as_ref().is_none_or(|b| cand.beats(b)) {
            best = Some(cand);
        }
    }
    best
}

struct Grower<'a> {
    x: &'a [SparseVector],
    y: &'a [Label],
    max_depth: Option<usize>,
    max_features: usize,
    rng: rng::Rng,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn leaf_for(&self, rows: &[usize]) -> Node {
        let d = rows.iter().filter(|&&r| self.y[r] == Label::Depressive).count();
        let label = if 2 * d > rows.len() { Label::Depressive } else { Label::NonDepressive };
        Node::Leaf { label, fraction: d as f64 / rows.len() as f64 }
    }

    /// Splits over a random subset of features: candidates are visited in
    /// random order until `max_features` non-constant ones were scored.
    fn choose_split(&mut self, rows: &[usize]) -> Option<SplitChoice> {
        let mut nonzero: BTreeMap<usize, Vec<(f64, Label)>> = BTreeMap::new();
        for &r in rows {
            for (f, v) in self.x[r].iter() {
                nonzero.entry(f).or_default().push((v, self.y[r]));
            }
        }
        let mut candidates: Vec<usize> = nonzero.keys().copied().collect();
        candidates.shuffle(&mut self.rng);
        let mut best: Option<SplitChoice> = None;
        let mut scored = 0;
        for f in candidates {
            if scored == self.max_features {
                break;
            }
            let mut values = nonzero.remove(&f).unwrap_or_default();
            let zeros = rows.len() - values.len();
            if zeros == 0 && values.iter().all(|v| v.0 == values[0].0) {
                continue;
            }
            values.extend(rows.iter().filter(|&&r| self.x[r].get(f) == 0.0).map(|&r| (0.0, self.y[r])));
            scored += 1;
            if let Some(c) = best_threshold(f, values) {
                if best.as_ref().is_none_or(|b| c.beats(b)) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let leaf = self.leaf_for(&rows);
        self.nodes.push(leaf);
        let pure = matches!(leaf, Node::Leaf { fraction, .. } if fraction == 0.0 || fraction == 1.0);
        if pure || rows.len() < 2 || self.max_depth.is_some_and(|m| depth >= m) {
            return id;
        }
        let Some(split) = self.choose_split(&rows) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&row| self.x[row].get(split.feature) <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
        id
    }
}

/// Grows one tree on `rows` (duplicates allowed).
pub fn grow_tree(
    x: &[SparseVector],
    y: &[Label],
    rows: Vec<usize>,
    max_depth: Option<usize>,
    max_features: usize,
    seed: u64,
) -> DecisionTree {
    let mut g = Grower { x, y, max_depth, max_features, rng: rng::derived(seed, 0x7265, 1), nodes: Vec::new() };
    g.grow(rows, 0);
    DecisionTree { nodes: g.nodes }
}

/// Root split a tree would pick when scoring every feature; used to check
/// the greedy criterion against an exhaustive search.
pub fn root_split(x: &[SparseVector], y: &[Label], n_features: usize) -> Option<SplitChoice> {
    let rows: Vec<usize> = (0..x.len()).collect();
    let mut g = Grower { x, y, max_depth: None, max_features: n_features, rng: rng::seeded(0), nodes: Vec::new() };
    g.choose_split(&rows)
}

/// Random forest: bootstrap resampling, Gini splits over a random feature
/// subset per node, and optional out-of-bag vote weights
/// `max(0.01, 1 - oob_error)`. Tree `k` uses seed `seed + k`, so results
/// do not depend on how trees are scheduled across threads.
pub fn rf_fit(x: &[SparseVector], y: &[Label], n_features: usize, cfg: &ForestConfig) -> Result<RFModel, FitError> {
    check_training_set(x, y)?;
    if x.len() < 2 {
        return Err(FitError::Config("need at least two rows".into()));
    }
    if cfg.n_estimators == 0 || cfg.max_features == Some(0) || cfg.max_depth == Some(0) {
        return Err(FitError::Config(format!("n_estimators, max_features and max_depth must be >= 1: {cfg:?}")));
    }
    if let Some(bad) = x.iter().filter_map(SparseVector::max_index).find(|&i| i >= n_features) {
        return Err(FitError::Dimension(bad, n_features));
    }
    let m = cfg.max_features.unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize).max(1);
    let n = x.len();
    let grown: Vec<(DecisionTree, f64)> = (0..cfg.n_estimators)
        .into_par_iter()
        .map(|k| {
            let seed = cfg.seed.wrapping_add(k as u64);
            let mut rng = rng::seeded(seed);
            let rows: Vec<usize> = if cfg.bootstrap { (0..n).map(|_| rng.gen_range(0..n)).collect() } else { (0..n).collect() };
            let mut in_bag = vec![false; n];
            rows.iter().for_each(|&r| in_bag[r] = true);
            let tree = grow_tree(x, y, rows, cfg.max_depth, m, seed);
            let weight = if cfg.weighted {
                let oob: Vec<usize> = (0..n).filter(|&r| !in_bag[r]).collect();
                let err = if oob.is_empty() {
                    0.0
                } else {
                    oob.iter().filter(|&&r| tree.predict(&x[r]) != y[r]).count() as f64 / oob.len() as f64
                };
                oob_weight(err)
            } else {
                1.0
            };
            (tree, weight)
        })
        .collect();
    let (trees, tree_weights) = grown.into_iter().unzip();
    Ok(RFModel { trees, tree_weights, cfg: *cfg, n_features })
}

pub fn oob_weight(oob_error: f64) -> f64 {
    (1.0 - oob_error).max(OOB_WEIGHT_FLOOR)
}

impl RFModel {
    /// Weighted share of votes for depressive.
    pub fn vote_fraction(&self, x: &SparseVector) -> f64 {
        weighted_vote(self.trees.iter().map(|t| t.predict(x)), &self.tree_weights)
    }

    /// Majority by weight; an exact half goes to non_depressive.
    pub fn predict(&self, x: &SparseVector) -> Prediction {
        let score = self.vote_fraction(x);
        let label = if score > 0.5 { Label::Depressive } else { Label::NonDepressive };
        Prediction { label, score }
    }
}

pub(crate) fn weighted_vote(votes: impl Iterator<Item = Label>, weights: &[f64]) -> f64 {
    let (mut dep, mut total) = (0.0, 0.0);
    for (v, &w) in votes.zip(weights) {
        total += w;
        if v == Label::Depressive {
            dep += w;
        }
    }
    dep / total
}

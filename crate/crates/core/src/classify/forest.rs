//! Random forest of CART trees grown with Gini impurity.
//!
//! Each tree sees a bootstrap sample the size of the training set and, at
//! every node, a fresh subset of `ceil(sqrt(cols))` candidate features. Trees
//! draw from their own ChaCha stream keyed by `(seed, tree index)`, so the
//! forest is identical however the trees are scheduled.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::Prediction;
use crate::cloud::ClassLabel;
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

pub const DEFAULT_TREES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub trees: usize,
    /// `None` grows until purity.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(cols))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            trees: DEFAULT_TREES,
            max_depth: None,
            min_samples_split: 2,
            max_features: None,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::Configuration("a forest needs at least one tree".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Configuration("min_samples_split must be at least 2".into()));
        }
        if self.max_features == Some(0) {
            return Err(Error::Configuration("max_features must be positive".into()));
        }
        Ok(())
    }

    fn features_per_split(&self, cols: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| (cols as f64).sqrt().ceil() as usize)
            .clamp(1, cols)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        #[serde(deserialize_with = "string_keyed_counts")]
        leaf_counts: BTreeMap<ClassLabel, usize>,
    },
}

// Untagged enums buffer map keys as strings, so integer keys need parsing here.
fn string_keyed_counts<'de, D>(de: D) -> std::result::Result<BTreeMap<ClassLabel, usize>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    use serde::de::Error as _;
    let raw = BTreeMap::<String, usize>::deserialize(de)?;
    raw.into_iter()
        .map(|(k, v)| k.parse().map(|k| (k, v)).map_err(D::Error::custom))
        .collect()
}

/// Flat tree; node 0 is the root. Rows with `value <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn leaf_for(&self, row: &[f64]) -> &BTreeMap<ClassLabel, usize> {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
                TreeNode::Leaf { leaf_counts } => return leaf_counts,
            }
        }
    }

    /// Majority class of the leaf reached by `row`; ties go to the smaller code.
    pub fn vote(&self, row: &[f64]) -> ClassLabel {
        majority(self.leaf_for(row))
    }
}

fn majority(counts: &BTreeMap<ClassLabel, usize>) -> ClassLabel {
    let mut best: Option<(ClassLabel, usize)> = None;
    for (&class, &n) in counts {
        if best.is_none_or(|(_, b)| n > b) {
            best = Some((class, n));
        }
    }
    best.map(|(c, _)| c).expect("leaf has at least one sample")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub config: ForestConfig,
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
}

impl RandomForestModel {
    pub fn predict_row(&self, row: &[f64]) -> Prediction {
        let mut votes: BTreeMap<ClassLabel, usize> = BTreeMap::new();
        for tree in &self.trees {
            *votes.entry(tree.vote(row)).or_default() += 1;
        }
        Prediction::from_votes(votes)
    }

    pub fn predict(&self, queries: &FeatureMatrix) -> Result<Vec<Prediction>> {
        rf_predict(self, queries)
    }
}

/// Training data in column-major order with labels mapped to dense ids.
struct Columns {
    cols: Vec<Vec<f64>>,
    class_of: Vec<usize>,
    classes: Vec<ClassLabel>,
}

struct Grower<'a> {
    data: &'a Columns,
    config: &'a ForestConfig,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// `sum(count^2)`; the Gini impurity of a node with `n` samples is
/// `1 - sum_sq / n^2`.
fn sum_squares(counts: &[usize]) -> u64 {
    counts.iter().map(|&c| (c * c) as u64).sum()
}

/// Exact test that a split lowers weighted Gini impurity:
/// `sq_l / n_l + sq_r / n_r > sq / n`, cross-multiplied in integers.
fn improves(sq_l: u64, n_l: u64, sq_r: u64, n_r: u64, sq: u64) -> bool {
    let n = (n_l + n_r) as u128;
    let lhs = (sq_l as u128 * n_r as u128 + sq_r as u128 * n_l as u128) * n;
    lhs > sq as u128 * n_l as u128 * n_r as u128
}

impl Grower<'_> {
    fn class_counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.data.classes.len()];
        for &r in rows {
            counts[self.data.class_of[r]] += 1;
        }
        counts
    }

    fn leaf(&self, counts: &[usize]) -> TreeNode {
        TreeNode::Leaf {
            leaf_counts: counts
                .iter()
                .enumerate()
                .filter(|(_, &n)| n > 0)
                .map(|(c, &n)| (self.data.classes[c], n))
                .collect(),
        }
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = self.class_counts(rows);
        self.nodes.push(self.leaf(&counts));
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || rows.len() < self.config.min_samples_split || self.config.max_depth.is_some_and(|d| depth >= d) {
            return id;
        }
        let Some(split) = self.best_split(rows, &counts) else {
            return id;
        };
        let col = &self.data.cols[split.feature];
        rows.sort_unstable_by(|&a, &b| (col[a] > split.threshold).cmp(&(col[b] > split.threshold)).then(a.cmp(&b)));
        let n_left = rows.iter().take_while(|&&r| col[r] <= split.threshold).count();
        let (l, r) = rows.split_at_mut(n_left);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, rows: &[usize], counts: &[usize]) -> Option<BestSplit> {
        let n_features = self.data.cols.len();
        let mut features = sample(&mut self.rng, n_features, self.mtry).into_vec();
        features.sort_unstable();

        let n = rows.len() as f64;
        let parent_sq = sum_squares(counts);
        let parent_score = parent_sq as f64 / n;
        let mut best: Option<BestSplit> = None;
        let mut sorted: Vec<usize> = rows.to_vec();
        let mut left = vec![0usize; counts.len()];
        for feature in features {
            let col = &self.data.cols[feature];
            sorted.sort_unstable_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            left.iter_mut().for_each(|c| *c = 0);
            let mut left_sq = 0u64;
            let mut right_sq = parent_sq;
            for i in 0..sorted.len() - 1 {
                let c = self.data.class_of[sorted[i]];
                // incremental sum of squares on both sides
                left_sq += (2 * left[c] + 1) as u64;
                right_sq -= (2 * (counts[c] - left[c]) - 1) as u64;
                left[c] += 1;
                let (lo, hi) = (col[sorted[i]], col[sorted[i + 1]]);
                if lo == hi {
                    continue;
                }
                let n_left = i + 1;
                let n_right = sorted.len() - n_left;
                if !improves(left_sq, n_left as u64, right_sq, n_right as u64, parent_sq) {
                    continue;
                }
                // weighted Gini decrease
                let gain = (left_sq as f64 / n_left as f64 + right_sq as f64 / n_right as f64 - parent_score) / n;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mid = 0.5 * (lo + hi);
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(BestSplit { feature, threshold, gain });
                }
            }
        }
        best
    }
}

pub fn rf_fit(x: &FeatureMatrix, config: &ForestConfig) -> Result<RandomForestModel> {
    config.validate()?;
    let labels = x.require_labels()?;
    if x.rows() == 0 {
        return Err(Error::InsufficientData("random forest needs training rows".into()));
    }
    if x.cols() == 0 {
        return Err(Error::Dimension("random forest needs at least one feature".into()));
    }
    let classes: Vec<ClassLabel> = {
        let mut c = labels.to_vec();
        c.sort_unstable();
        c.dedup();
        c
    };
    let data = Columns {
        cols: (0..x.cols()).map(|c| x.column(c).collect()).collect(),
        class_of: labels.iter().map(|l| classes.binary_search(l).unwrap()).collect(),
        classes,
    };
    let mtry = config.features_per_split(x.cols());
    let n = x.rows();
    let trees = (0..config.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64);
            let mut rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut grower = Grower {
                data: &data,
                config,
                mtry,
                rng,
                nodes: Vec::new(),
            };
            grower.grow(&mut rows, 0);
            DecisionTree { nodes: grower.nodes }
        })
        .collect();
    Ok(RandomForestModel {
        config: *config,
        n_features: x.cols(),
        trees,
    })
}

pub fn rf_predict(model: &RandomForestModel, queries: &FeatureMatrix) -> Result<Vec<Prediction>> {
    if queries.cols() != model.n_features {
        return Err(Error::Dimension(format!(
            "queries have {} columns, forest was trained on {}",
            queries.cols(),
            model.n_features
        )));
    }
    Ok((0..queries.rows())
        .into_par_iter()
        .map(|r| model.predict_row(queries.row(r)))
        .collect())
}

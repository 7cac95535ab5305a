//! k-nearest-neighbor classification with uniform votes.
//!
//! Neighbors are ordered by `(squared distance, training row)`, so equal
//! distances resolve to the lower row index; vote ties go to the smaller
//! class code. Queries run against an exact kd-tree that honors the same
//! ordering as a full sort.

use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;

use crate::classify::Prediction;
use crate::cloud::ClassLabel;
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

pub const DEFAULT_K: usize = 10;
const LEAF_SIZE: usize = 16;

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist: f64,
    row: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.dist.total_cmp(&other.dist).then(self.row.cmp(&other.row))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
enum KdNode {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct KdIndex {
    order: Vec<usize>,
    nodes: Vec<KdNode>,
}

impl KdIndex {
    fn build(x: &FeatureMatrix) -> Self {
        let mut idx = KdIndex {
            order: (0..x.rows()).collect(),
            nodes: Vec::new(),
        };
        if x.rows() > 0 {
            idx.split(x, 0, x.rows());
        }
        idx
    }

    fn split(&mut self, x: &FeatureMatrix, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(KdNode::Leaf { start, end });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let d = x.cols();
        let mut best = (0, 0.0);
        for axis in 0..d {
            let (lo, hi) = self.order[start..end]
                .iter()
                .map(|&r| x.get(r, axis))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            if hi - lo > best.1 {
                best = (axis, hi - lo);
            }
        }
        if best.1 <= 0.0 {
            return id;
        }
        let axis = best.0;
        let mid = start + (end - start) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| x.get(a, axis).total_cmp(&x.get(b, axis)));
        let value = x.get(self.order[mid], axis);
        let left = self.split(x, start, mid);
        let right = self.split(x, mid, end);
        self.nodes[id] = KdNode::Split { axis, value, left, right };
        id
    }

    /// The `k` smallest candidates, ascending.
    fn nearest(&self, x: &FeatureMatrix, query: &[f64], k: usize) -> Vec<Candidate> {
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        if !self.nodes.is_empty() {
            self.search(x, 0, query, k, &mut heap);
        }
        heap.into_sorted_vec()
    }

    fn search(&self, x: &FeatureMatrix, node: usize, q: &[f64], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            KdNode::Leaf { start, end } => {
                for &row in &self.order[start..end] {
                    let cand = Candidate {
                        dist: squared_distance(q, x.row(row)),
                        row,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            KdNode::Split { axis, value, left, right } => {
                let delta = q[axis] - value;
                let (near, far) = if delta < 0.0 { (left, right) } else { (right, left) };
                self.search(x, near, q, k, heap);
                // a plane gap can only understate the full distance, and ties
                // must still be visited for the row-index tie-break
                if heap.len() < k || delta * delta <= heap.peek().unwrap().dist {
                    self.search(x, far, q, k, heap);
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    training: FeatureMatrix,
    labels: Vec<ClassLabel>,
    index: KdIndex,
}

impl KnnModel {
    pub fn fit(training: FeatureMatrix, k: usize) -> Result<Self> {
        let labels = training.require_labels()?.to_vec();
        if k == 0 || k > training.rows() {
            return Err(Error::Configuration(format!(
                "k = {k} must be between 1 and the {} training rows",
                training.rows()
            )));
        }
        let index = KdIndex::build(&training);
        Ok(KnnModel {
            k,
            training,
            labels,
            index,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn training(&self) -> &FeatureMatrix {
        &self.training
    }

    /// Training rows of the `k` nearest neighbors, nearest first.
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        self.index
            .nearest(&self.training, query, self.k)
            .into_iter()
            .map(|c| c.row)
            .collect()
    }

    pub fn predict_row(&self, query: &[f64]) -> Prediction {
        let mut votes: BTreeMap<ClassLabel, usize> = BTreeMap::new();
        for row in self.neighbors(query) {
            *votes.entry(self.labels[row]).or_default() += 1;
        }
        Prediction::from_votes(votes)
    }

    pub fn predict(&self, queries: &FeatureMatrix) -> Result<Vec<Prediction>> {
        knn_predict(self, queries)
    }
}

pub fn knn_predict(model: &KnnModel, queries: &FeatureMatrix) -> Result<Vec<Prediction>> {
    if queries.cols() != model.training.cols() {
        return Err(Error::Dimension(format!(
            "queries have {} columns, training has {}",
            queries.cols(),
            model.training.cols()
        )));
    }
    Ok((0..queries.rows())
        .into_par_iter()
        .map(|r| model.predict_row(queries.row(r)))
        .collect())
}

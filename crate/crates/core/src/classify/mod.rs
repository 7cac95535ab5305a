//! KNN and random forest classifiers.

mod forest;
mod knn;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cloud::ClassLabel;

pub use forest::{rf_fit, rf_predict, DecisionTree, ForestConfig, RandomForestModel, TreeNode, DEFAULT_TREES};
pub use knn::{knn_predict, KnnModel, DEFAULT_K};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: ClassLabel,
    pub votes: BTreeMap<ClassLabel, usize>,
}

impl Prediction {
    /// Plurality vote, smallest class code on ties.
    pub fn from_votes(votes: BTreeMap<ClassLabel, usize>) -> Self {
        let mut label = None;
        let mut top = 0;
        for (&class, &n) in &votes {
            if label.is_none() || n > top {
                label = Some(class);
                top = n;
            }
        }
        Prediction {
            label: label.expect("at least one vote"),
            votes,
        }
    }
}

/// Which classifier a pipeline uses, with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierConfig {
    Knn { k: usize },
    Rf(ForestConfig),
}

impl ClassifierConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierConfig::Knn { .. } => "KNN",
            ClassifierConfig::Rf(_) => "RF",
        }
    }
}

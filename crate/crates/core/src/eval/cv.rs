//! Stratified k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{f1_score, ConfusionMatrix, F1Average};
use crate::classify::{rf_fit, ClassifierConfig, KnnModel};
use crate::cloud::ClassLabel;
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::pca::fit_pca;

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossValPlan {
    pub folds: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for CrossValPlan {
    fn default() -> Self {
        CrossValPlan {
            folds: DEFAULT_FOLDS,
            seed: 0,
            stratified: true,
        }
    }
}

/// What a pipeline is, for the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub name: String,
    pub n_components: Option<usize>,
    pub classifier: Option<ClassifierConfig>,
}

/// Something that can be trained on one fold and scored on another.
///
/// `test` never carries labels.
pub trait Pipeline: Sync {
    fn describe(&self) -> PipelineSpec;
    fn fit_predict(&self, train: &FeatureMatrix, test: &FeatureMatrix) -> Result<Vec<ClassLabel>>;
}

/// Optional PCA followed by a classifier. PCA is fitted on the training
/// portion only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelPipeline {
    pub n_components: Option<usize>,
    pub classifier: ClassifierConfig,
}

impl Pipeline for ModelPipeline {
    fn describe(&self) -> PipelineSpec {
        PipelineSpec {
            name: self.classifier.name().to_string(),
            n_components: self.n_components,
            classifier: Some(self.classifier),
        }
    }

    fn fit_predict(&self, train: &FeatureMatrix, test: &FeatureMatrix) -> Result<Vec<ClassLabel>> {
        let (train, test) = match self.n_components {
            Some(n) => {
                let pca = fit_pca(&train.without_labels(), n)?;
                (pca.transform(train)?, pca.transform(test)?)
            }
            None => (train.clone(), test.clone()),
        };
        let predictions = match self.classifier {
            ClassifierConfig::Knn { k } => KnnModel::fit(train, k)?.predict(&test)?,
            ClassifierConfig::Rf(cfg) => rf_fit(&train, &cfg)?.predict(&test)?,
        };
        Ok(predictions.into_iter().map(|p| p.label).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    /// Human-readable name of the input columns, e.g. `xyz`.
    pub feature_set: String,
    pub columns: Vec<String>,
    pub pipeline: PipelineSpec,
    pub plan: CrossValPlan,
    pub f1_average: F1Average,
    /// Settings of earlier stages (radius, normalization, ...), recorded verbatim.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub upstream: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: EvaluationConfig,
    pub per_fold_f1: Vec<f64>,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub confusion: ConfusionMatrix,
}

/// Fold index of every row. Rows are shuffled by `seed`, then dealt
/// round-robin, per class when stratified.
pub fn assign_folds(labels: &[ClassLabel], plan: &CrossValPlan) -> Result<Vec<usize>> {
    if plan.folds < 2 {
        return Err(Error::Configuration(format!("need at least 2 folds, got {}", plan.folds)));
    }
    if labels.len() < plan.folds {
        return Err(Error::InsufficientData(format!("{} rows cannot fill {} folds", labels.len(), plan.folds)));
    }
    let mut classes: Vec<ClassLabel> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if plan.stratified {
        for &class in &classes {
            let count = labels.iter().filter(|&&l| l == class).count();
            if count < plan.folds {
                return Err(Error::Stratification {
                    class,
                    count,
                    folds: plan.folds,
                });
            }
        }
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(plan.seed));
    let mut dealt = vec![0usize; classes.len()];
    let mut fold = vec![0usize; labels.len()];
    for (position, &row) in order.iter().enumerate() {
        fold[row] = if plan.stratified {
            let c = classes.binary_search(&labels[row]).unwrap();
            dealt[c] += 1;
            (dealt[c] - 1) % plan.folds
        } else {
            position % plan.folds
        };
    }
    Ok(fold)
}

pub fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Trains and scores `pipeline` on every fold.
pub fn cross_validate<P: Pipeline + ?Sized>(
    features: &FeatureMatrix,
    feature_set: &str,
    plan: &CrossValPlan,
    pipeline: &P,
    f1_average: F1Average,
) -> Result<EvaluationReport> {
    let labels = features.require_labels()?;
    let fold_of = assign_folds(labels, plan)?;
    let outcomes: Vec<(f64, Vec<ClassLabel>, Vec<ClassLabel>)> = (0..plan.folds)
        .into_par_iter()
        .map(|fold| {
            let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..features.rows()).partition(|&r| fold_of[r] == fold);
            let train = features.select_rows(&train_idx);
            let test = features.select_rows(&test_idx).without_labels();
            let predicted = pipeline.fit_predict(&train, &test)?;
            let truth: Vec<ClassLabel> = test_idx.iter().map(|&r| labels[r]).collect();
            let score = f1_score(&truth, &predicted, f1_average)?;
            Ok((score, truth, predicted))
        })
        .collect::<Result<_>>()?;

    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut confusion = ConfusionMatrix::new(classes);
    let mut per_fold_f1 = Vec::with_capacity(plan.folds);
    for (score, truth, predicted) in &outcomes {
        per_fold_f1.push(*score);
        confusion.add(truth, predicted);
    }
    let (mean_f1, std_f1) = mean_and_sample_std(&per_fold_f1);
    Ok(EvaluationReport {
        config: EvaluationConfig {
            feature_set: feature_set.to_string(),
            columns: features.column_names().to_vec(),
            pipeline: pipeline.describe(),
            plan: *plan,
            f1_average,
            upstream: serde_json::Value::Null,
        },
        per_fold_f1,
        mean_f1,
        std_f1,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_and_stratify() {
        let labels: Vec<ClassLabel> = (0..23).map(|i| if i < 15 { 1 } else { 2 }).collect();
        let plan = CrossValPlan {
            folds: 5,
            seed: 3,
            stratified: true,
        };
        let f = assign_folds(&labels, &plan).unwrap();
        for fold in 0..5 {
            let ones = (0..23).filter(|&r| f[r] == fold && labels[r] == 1).count();
            let twos = (0..23).filter(|&r| f[r] == fold && labels[r] == 2).count();
            assert_eq!(ones, 3);
            assert!((1..=2).contains(&twos));
        }
    }

    #[test]
    fn small_class_is_rejected() {
        let labels = vec![0, 0, 0, 0, 0, 1, 1];
        let err = assign_folds(&labels, &CrossValPlan::default()).unwrap_err();
        assert!(matches!(err, Error::Stratification { class: 1, count: 2, folds: 5 }));
        let unstratified = CrossValPlan {
            stratified: false,
            ..Default::default()
        };
        assert!(assign_folds(&labels, &unstratified).is_ok());
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_and_sample_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
    }
}

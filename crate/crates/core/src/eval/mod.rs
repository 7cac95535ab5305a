//! Cross-validated scoring and result tables.

mod cv;
mod metrics;
mod report;

pub use cv::{
    assign_folds, cross_validate, mean_and_sample_std, CrossValPlan, EvaluationConfig, EvaluationReport, ModelPipeline,
    Pipeline, PipelineSpec, DEFAULT_FOLDS,
};
pub use metrics::{f1_score, macro_f1, ConfusionMatrix, F1Average};
pub use report::{
    format_cell, reference_comparison, render_report, ReferenceComparison, RenderedTables, REFERENCE_BAND,
    REFERENCE_KNN_F1_AT_10, REFERENCE_KNN_STD_AT_10,
};

use std::ops::RangeInclusive;

use crate::classify::ClassifierConfig;
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

pub const SPATIAL_FEATURE_SET: &str = "xyz";
pub const FULL_FEATURE_SET: &str = "xyz+coefficients";

/// Feature-set comparison without PCA: the first three columns alone, then
/// the full matrix, each under every classifier.
pub fn feature_set_experiments(
    features: &FeatureMatrix,
    classifiers: &[ClassifierConfig],
    plan: &CrossValPlan,
    f1: F1Average,
) -> Result<Vec<EvaluationReport>> {
    features.require_labels()?;
    if features.cols() < 3 {
        return Err(Error::Dimension(format!("need x, y, z columns, got {}", features.cols())));
    }
    let spatial = features.select_columns(&[0, 1, 2])?;
    let mut reports = Vec::new();
    for (name, matrix) in [(SPATIAL_FEATURE_SET, &spatial), (FULL_FEATURE_SET, features)] {
        for &classifier in classifiers {
            let pipeline = ModelPipeline {
                n_components: None,
                classifier,
            };
            reports.push(cross_validate(matrix, name, plan, &pipeline, f1)?);
        }
    }
    Ok(reports)
}

/// Component sweep: the full matrix reduced to `n` principal components for
/// every `n` in `components`, under every classifier.
pub fn component_experiments(
    features: &FeatureMatrix,
    components: RangeInclusive<usize>,
    classifiers: &[ClassifierConfig],
    plan: &CrossValPlan,
    f1: F1Average,
) -> Result<Vec<EvaluationReport>> {
    features.require_labels()?;
    if *components.start() == 0 || components.is_empty() || *components.end() > features.cols() {
        return Err(Error::Dimension(format!(
            "component range {}..={} must lie within 1..={}",
            components.start(),
            components.end(),
            features.cols()
        )));
    }
    let mut reports = Vec::new();
    for n in components {
        for &classifier in classifiers {
            let pipeline = ModelPipeline {
                n_components: Some(n),
                classifier,
            };
            reports.push(cross_validate(features, FULL_FEATURE_SET, plan, &pipeline, f1)?);
        }
    }
    Ok(reports)
}

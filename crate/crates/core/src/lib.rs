//! Product-coefficient features for LiDAR point cloud classification.
//!
//! The pipeline normalizes a labeled point cloud into the unit cube, computes
//! seven dyadic product coefficients per point from the counting measure of
//! its spherical neighborhood, optionally reduces the resulting ten columns
//! with covariance PCA, and scores KNN and random forest classifiers with
//! stratified cross-validation.

pub mod classify;
pub mod cloud;
pub mod dyadic;
mod error;
pub mod eval;
pub mod features;
pub mod io;
pub mod matrix;
pub mod pca;
pub mod spatial;
pub mod synth;

pub use classify::{ClassifierConfig, ForestConfig, KnnModel, Prediction, RandomForestModel};
pub use cloud::{normalize_unit_cube, Bounds, ClassLabel, NormalizeMode, Point3, PointCloud};
pub use dyadic::{CoefficientTree, DyadicTree, NodeId};
pub use error::{Error, ErrorKind, Result};
pub use eval::{CrossValPlan, EvaluationReport, F1Average};
pub use features::{extract_features, NeighborhoodSpec, PcFeatureRow};
pub use matrix::FeatureMatrix;
pub use pca::{fit_pca, PcaModel};
pub use spatial::{KdTree, LinearScan, NeighborSearch};

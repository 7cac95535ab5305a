//! Run configuration, input digests and sidecar manifests.
//!
//! Every CSV artifact `name.csv` is accompanied by `name.manifest.json`
//! holding the run configuration, the digests of its inputs and the digest of
//! the CSV itself. JSON artifacts embed the same information directly. Paths
//! are recorded by file name only so that artifacts stay comparable across
//! output directories.

use std::path::{Path, PathBuf};

use prodcoef::eval::F1Average;
use prodcoef::synth::SceneParams;
use prodcoef::{ClassifierConfig, NormalizeMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Las,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSettings {
    pub format: InputFormat,
    pub has_label: bool,
    pub normalize: NormalizeMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSettings {
    /// Radius in normalized units, after any automatic choice.
    pub radius: f64,
    pub include_center: bool,
    /// Median neighborhood size the radius was tuned for, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_neighbors: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSettings {
    pub tables: Vec<u8>,
    /// Inclusive PCA component range for the component sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<(usize, usize)>,
    pub classifiers: Vec<ClassifierConfig>,
    pub folds: usize,
    pub f1: F1Average,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub classifier: ClassifierConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_components: Option<usize>,
}

/// Everything that determines a stage's output. Thread count and output
/// directory are deliberately absent: neither may change results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub stage: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SceneParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neighborhood: Option<NeighborhoodSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pca_components: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvaluationSettings>,
}

impl RunConfig {
    pub fn new(stage: &str, seed: u64) -> Self {
        RunConfig {
            stage: stage.to_string(),
            seed,
            input: None,
            synth: None,
            neighborhood: None,
            pca_components: None,
            train: None,
            evaluation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of_bytes(path: &Path, bytes: &[u8]) -> Self {
        FileDigest {
            file: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }

    pub fn of_file(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self::of_bytes(path, &bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub inputs: Vec<FileDigest>,
    /// Manifests of the inputs, when they had one.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub upstream: Vec<Manifest>,
    pub output: FileDigest,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

/// Reads the sidecar of `csv` if there is one. A sidecar whose recorded
/// digest no longer matches the file is ignored with a warning.
pub fn read_upstream(csv: &Path, digest: &FileDigest) -> CliResult<Option<Manifest>> {
    let path = manifest_path(csv);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.clone(), source })?;
    if m.output.sha256 != digest.sha256 {
        log::warn!("{} does not describe the current {}; ignoring it", path.display(), csv.display());
        return Ok(None);
    }
    Ok(Some(m))
}

pub fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes `csv` and its manifest.
pub fn write_csv_artifact(
    path: &Path,
    csv: &str,
    config: &RunConfig,
    inputs: Vec<FileDigest>,
    upstream: Vec<Manifest>,
    details: serde_json::Value,
) -> CliResult<()> {
    write_text(path, csv)?;
    let manifest = Manifest {
        config: config.clone(),
        inputs,
        upstream,
        output: FileDigest::of_bytes(path, csv.as_bytes()),
        details,
    };
    write_text(&manifest_path(path), &to_json(&manifest))
}

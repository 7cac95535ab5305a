use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use prodcoef::classify::{DEFAULT_K, DEFAULT_TREES};
use prodcoef::eval::{F1Average, DEFAULT_FOLDS};
use prodcoef::{ClassifierConfig, ForestConfig, NormalizeMode};

use crate::artifact::InputFormat;
use crate::error::{CliError, CliResult};

/// LiDAR point classification with dyadic product-coefficient features.
#[derive(Debug, Parser)]
#[command(name = "prodcoef", version, about)]
pub struct Cli {
    /// Seed for the synthetic scene, fold assignment and random forests.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Directory receiving every artifact.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,

    /// Worker threads; 0 uses every core. Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a LAS or CSV cloud, normalize it and write cloud.csv.
    Ingest(InputArgs),
    /// Generate a labeled synthetic scene (scene.csv).
    Synth(SynthArgs),
    /// Compute the 10-column feature matrix (features.csv).
    Features {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        neighborhood: NeighborhoodArgs,
    },
    /// Fit PCA on a feature CSV (pca_model.json, pca_features.csv).
    Pca {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        components: usize,
    },
    /// Train one classifier on a labeled feature CSV (model.json).
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_enum, default_value_t = ClassifierChoice::Knn)]
        classifier: ClassifierChoice,
        /// Reduce with PCA before training.
        #[arg(long)]
        components: Option<usize>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Cross-validate the experiment grid on a labeled feature CSV.
    Evaluate {
        #[arg(long)]
        features: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// features followed by evaluate, in one go.
    Run {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        neighborhood: NeighborhoodArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Re-render tables from a reports.json.
    Report {
        #[arg(long)]
        reports: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to the file extension.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// CSV rows carry a fourth, integer label column.
    #[arg(long)]
    pub has_label: bool,
    #[arg(long, value_enum, default_value_t = NormalizeArg::PerAxis)]
    pub normalize: NormalizeArg,
}

impl InputArgs {
    pub fn resolved_format(&self) -> CliResult<InputFormat> {
        if let Some(f) = self.format {
            return Ok(f);
        }
        match self.input.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("las") => Ok(InputFormat::Las),
            Some("csv") | Some("txt") => Ok(InputFormat::Csv),
            _ => Err(CliError::Usage(format!(
                "cannot tell the format of {}; pass --format las|csv",
                self.input.display()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormalizeArg {
    PerAxis,
    Uniform,
}

impl From<NormalizeArg> for NormalizeMode {
    fn from(n: NormalizeArg) -> Self {
        match n {
            NormalizeArg::PerAxis => NormalizeMode::PerAxis,
            NormalizeArg::Uniform => NormalizeMode::Uniform,
        }
    }
}

#[derive(Debug, Args)]
pub struct NeighborhoodArgs {
    /// Sphere radius in normalized units.
    #[arg(long, default_value_t = 2.0, conflicts_with = "target_neighbors")]
    pub radius: f64,
    /// Pick the radius whose median neighborhood holds this many points.
    #[arg(long)]
    pub target_neighbors: Option<usize>,
    /// Leave each point out of its own neighborhood.
    #[arg(long)]
    pub no_include_center: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 500)]
    pub points_per_class: usize,
    /// 1 keeps class geometries apart, 0 mixes them completely.
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierChoice {
    Knn,
    Rf,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableChoice {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum F1Arg {
    Macro,
    Micro,
    Weighted,
}

impl From<F1Arg> for F1Average {
    fn from(f: F1Arg) -> Self {
        match f {
            F1Arg::Macro => F1Average::Macro,
            F1Arg::Micro => F1Average::Micro,
            F1Arg::Weighted => F1Average::Weighted,
        }
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Neighbors per KNN vote.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_TREES)]
    pub trees: usize,
    /// Tree depth cap; unbounded when absent.
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub min_samples_split: usize,
    /// Candidate features per split; ceil(sqrt(columns)) when absent.
    #[arg(long)]
    pub max_features: Option<usize>,
}

impl ModelArgs {
    pub fn classifiers(&self, choice: ClassifierChoice, seed: u64) -> Vec<ClassifierConfig> {
        let knn = ClassifierConfig::Knn { k: self.k };
        let rf = ClassifierConfig::Rf(ForestConfig {
            trees: self.trees,
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            max_features: self.max_features,
            seed,
        });
        match choice {
            ClassifierChoice::Knn => vec![knn],
            ClassifierChoice::Rf => vec![rf],
            ClassifierChoice::Both => vec![knn, rf],
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// 1: xyz against xyz + coefficients; 2: PCA component sweep.
    #[arg(long, value_enum, default_value_t = TableChoice::All)]
    pub table: TableChoice,
    /// Component range for table 2, e.g. `3..10` or `5`.
    #[arg(long, default_value = "3..10", value_parser = parse_range)]
    pub components: (usize, usize),
    #[arg(long, value_enum, default_value_t = ClassifierChoice::Both)]
    pub classifier: ClassifierChoice,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
    #[arg(long, value_enum, default_value_t = F1Arg::Macro)]
    pub f1: F1Arg,
    #[command(flatten)]
    pub model: ModelArgs,
}

/// `lo..hi`, `lo..=hi` (both inclusive) or a single `n`.
pub fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad component count {t:?}: {e}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let n = parse(s)?;
            (n, n)
        }
    };
    if lo == 0 || lo > hi {
        return Err(format!("range {lo}..{hi} must satisfy 1 <= lo <= hi"));
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("3..10"), Ok((3, 10)));
        assert_eq!(parse_range("3..=10"), Ok((3, 10)));
        assert_eq!(parse_range("12"), Ok((12, 12)));
        assert!(parse_range("0..3").is_err());
        assert!(parse_range("5..3").is_err());
        assert!(parse_range("a").is_err());
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

//! Table rendering for evaluation reports.
//!
//! Reports without PCA form the feature-set comparison (one row per feature
//! set, KNN and RF columns). Reports with PCA form the component sweep (one
//! row per component count). Cells read `mean (± std)` with two decimals.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::cv::EvaluationReport;

const CLASSIFIER_COLUMNS: [&str; 2] = ["KNN", "RF"];

/// Expected KNN score at 10 components on the 277,572-point tutorial scene.
pub const REFERENCE_KNN_F1_AT_10: f64 = 0.85;
pub const REFERENCE_KNN_STD_AT_10: f64 = 0.02;
/// Band within which a reproduction counts as agreeing. Informational only.
pub const REFERENCE_BAND: f64 = 0.15;

pub fn format_cell(mean: f64, std: f64) -> String {
    format!("{mean:.2} (± {std:.2})")
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedTables {
    pub feature_table_csv: Option<String>,
    pub feature_table_text: Option<String>,
    pub component_table_csv: Option<String>,
    pub component_table_text: Option<String>,
    /// `n,classifier,mean_f1,std_f1` for every PCA report.
    pub plot_csv: Option<String>,
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn to_csv(&self) -> String {
        let quote = |s: &String| {
            if s.contains(',') || s.contains('"') {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.clone()
            }
        };
        let mut out = String::new();
        for line in std::iter::once(&self.header).chain(&self.rows) {
            out.push_str(&line.iter().map(quote).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|c| {
                std::iter::once(&self.header)
                    .chain(&self.rows)
                    .map(|r| r[c].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:<w$}"))
                .collect::<Vec<_>>()
                .join(" | ")
                .trim_end()
                .to_string()
        };
        let mut out = line(&self.header);
        out.push('\n');
        out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

fn cell_for(reports: &[&EvaluationReport], classifier: &str) -> String {
    reports
        .iter()
        .find(|r| r.config.pipeline.name == classifier)
        .map(|r| format_cell(r.mean_f1, r.std_f1))
        .unwrap_or_default()
}

pub fn render_report(reports: &[EvaluationReport]) -> RenderedTables {
    let mut out = RenderedTables::default();
    let header = |first: &str| -> Vec<String> {
        std::iter::once(first.to_string())
            .chain(CLASSIFIER_COLUMNS.iter().map(|s| s.to_string()))
            .collect()
    };

    let mut by_set: Vec<(&str, Vec<&EvaluationReport>)> = Vec::new();
    for r in reports.iter().filter(|r| r.config.pipeline.n_components.is_none()) {
        match by_set.iter_mut().find(|(name, _)| *name == r.config.feature_set) {
            Some((_, group)) => group.push(r),
            None => by_set.push((&r.config.feature_set, vec![r])),
        }
    }
    if !by_set.is_empty() {
        let table = Table {
            header: header("features"),
            rows: by_set
                .iter()
                .map(|(name, group)| {
                    std::iter::once(name.to_string())
                        .chain(CLASSIFIER_COLUMNS.iter().map(|c| cell_for(group, c)))
                        .collect()
                })
                .collect(),
        };
        out.feature_table_csv = Some(table.to_csv());
        out.feature_table_text = Some(table.to_text());
    }

    let mut by_n: BTreeMap<usize, Vec<&EvaluationReport>> = BTreeMap::new();
    for r in reports {
        if let Some(n) = r.config.pipeline.n_components {
            by_n.entry(n).or_default().push(r);
        }
    }
    if !by_n.is_empty() {
        let table = Table {
            header: header("n_components"),
            rows: by_n
                .iter()
                .map(|(n, group)| {
                    std::iter::once(n.to_string())
                        .chain(CLASSIFIER_COLUMNS.iter().map(|c| cell_for(group, c)))
                        .collect()
                })
                .collect(),
        };
        out.component_table_csv = Some(table.to_csv());
        out.component_table_text = Some(table.to_text());

        let mut plot = String::from("n,classifier,mean_f1,std_f1\n");
        for (n, group) in &by_n {
            for r in group {
                writeln!(plot, "{n},{},{},{}", r.config.pipeline.name, r.mean_f1, r.std_f1).unwrap();
            }
        }
        out.plot_csv = Some(plot);
    }
    out
}

/// Comparison of a measured KNN score at 10 components with the expected one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceComparison {
    pub measured_mean: f64,
    pub measured_std: f64,
    pub reference_mean: f64,
    pub reference_std: f64,
    pub band: f64,
    pub within_band: bool,
}

impl ReferenceComparison {
    pub fn summary(&self) -> String {
        format!(
            "KNN F1 at n = 10: measured {} vs reference {}; band ±{:.2}: {} (informational)",
            format_cell(self.measured_mean, self.measured_std),
            format_cell(self.reference_mean, self.reference_std),
            self.band,
            if self.within_band { "within" } else { "outside" }
        )
    }
}

pub fn reference_comparison(reports: &[EvaluationReport]) -> Option<ReferenceComparison> {
    let r = reports
        .iter()
        .find(|r| r.config.pipeline.name == "KNN" && r.config.pipeline.n_components == Some(10))?;
    Some(ReferenceComparison {
        measured_mean: r.mean_f1,
        measured_std: r.std_f1,
        reference_mean: REFERENCE_KNN_F1_AT_10,
        reference_std: REFERENCE_KNN_STD_AT_10,
        band: REFERENCE_BAND,
        within_band: (r.mean_f1 - REFERENCE_KNN_F1_AT_10).abs() <= REFERENCE_BAND,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::cv::{CrossValPlan, EvaluationConfig, PipelineSpec};
    use crate::eval::metrics::{ConfusionMatrix, F1Average};

    fn report(set: &str, name: &str, n: Option<usize>, mean: f64, std: f64) -> EvaluationReport {
        EvaluationReport {
            config: EvaluationConfig {
                feature_set: set.into(),
                columns: vec![],
                pipeline: PipelineSpec {
                    name: name.into(),
                    n_components: n,
                    classifier: None,
                },
                plan: CrossValPlan::default(),
                f1_average: F1Average::Macro,
                upstream: serde_json::Value::Null,
            },
            per_fold_f1: vec![],
            mean_f1: mean,
            std_f1: std,
            confusion: ConfusionMatrix::new(vec![]),
        }
    }

    #[test]
    fn cell_format() {
        assert_eq!(format_cell(0.85, 0.02), "0.85 (± 0.02)");
        assert_eq!(format_cell(0.333, 0.1849), "0.33 (± 0.18)");
    }

    #[test]
    fn feature_table_has_one_row_per_set() {
        let t = render_report(&[report("xyz", "KNN", None, 0.33, 0.18), report("xyz", "RF", None, 0.41, 0.16)]);
        assert_eq!(t.feature_table_csv.unwrap(), "features,KNN,RF\nxyz,0.33 (± 0.18),0.41 (± 0.16)\n");
        assert!(t.component_table_csv.is_none());
    }

    #[test]
    fn component_table_has_eight_rows() {
        let mut reports = Vec::new();
        for n in (3..=10).rev() {
            for c in ["RF", "KNN"] {
                reports.push(report("all", c, Some(n), n as f64 / 20.0, 0.01));
            }
        }
        let t = render_report(&reports);
        let csv = t.component_table_csv.unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 9);
        assert_eq!(lines[0], "n_components,KNN,RF");
        assert_eq!(lines[1], "3,0.15 (± 0.01),0.15 (± 0.01)");
        assert!(lines[8].starts_with("10,0.50"));
        assert_eq!(t.plot_csv.unwrap().lines().count(), 17);
        assert!(t.component_table_text.unwrap().contains(" | "));
    }

    #[test]
    fn reference_band() {
        let c = reference_comparison(&[report("all", "KNN", Some(10), 0.72, 0.03)]).unwrap();
        assert!(c.within_band);
        let c = reference_comparison(&[report("all", "KNN", Some(10), 0.5, 0.03)]).unwrap();
        assert!(!c.within_band);
        assert!(c.summary().contains("outside"));
        assert!(reference_comparison(&[report("all", "RF", Some(10), 0.5, 0.0)]).is_none());
    }
}

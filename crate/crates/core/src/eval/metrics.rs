use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cloud::ClassLabel;
use crate::error::{Error, Result};

/// How per-class F1 scores are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum F1Average {
    /// Unweighted mean over classes present in the true labels.
    #[default]
    Macro,
    /// Global counts; equals accuracy for single-label data.
    Micro,
    /// Mean weighted by each class's true count.
    Weighted,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    tp: usize,
    fp: usize,
    fn_: usize,
}

fn tallies(truth: &[ClassLabel], predicted: &[ClassLabel]) -> Result<BTreeMap<ClassLabel, Tally>> {
    if truth.len() != predicted.len() {
        return Err(Error::Dimension(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::EmptyInput("no labels to score".into()));
    }
    let mut t: BTreeMap<ClassLabel, Tally> = BTreeMap::new();
    for &c in truth {
        t.entry(c).or_default();
    }
    for (&y, &p) in truth.iter().zip(predicted) {
        if y == p {
            t.get_mut(&y).unwrap().tp += 1;
        } else {
            t.get_mut(&y).unwrap().fn_ += 1;
            if let Some(e) = t.get_mut(&p) {
                e.fp += 1;
            }
        }
    }
    Ok(t)
}

fn f1(t: &Tally) -> f64 {
    let precision = if t.tp + t.fp == 0 { 0.0 } else { t.tp as f64 / (t.tp + t.fp) as f64 };
    let recall = if t.tp + t.fn_ == 0 { 0.0 } else { t.tp as f64 / (t.tp + t.fn_) as f64 };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Sums in ascending order so the result does not depend on class codes.
fn sorted_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.into_iter().sum()
}

pub fn macro_f1(truth: &[ClassLabel], predicted: &[ClassLabel]) -> Result<f64> {
    f1_score(truth, predicted, F1Average::Macro)
}

pub fn f1_score(truth: &[ClassLabel], predicted: &[ClassLabel], average: F1Average) -> Result<f64> {
    let t = tallies(truth, predicted)?;
    Ok(match average {
        F1Average::Macro => sorted_sum(t.values().map(f1)) / t.len() as f64,
        F1Average::Weighted => sorted_sum(t.values().map(|x| f1(x) * (x.tp + x.fn_) as f64)) / truth.len() as f64,
        F1Average::Micro => {
            // predictions of classes absent from the truth count as false positives
            let tp: usize = t.values().map(|x| x.tp).sum();
            let wrong = truth.len() - tp;
            f1(&Tally { tp, fp: wrong, fn_: wrong })
        }
    })
}

/// Counts indexed `[true class][predicted class]` over a fixed class list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<ClassLabel>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<ClassLabel>) -> Self {
        let k = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; k]; k],
        }
    }

    /// Predictions outside the class list are dropped.
    pub fn add(&mut self, truth: &[ClassLabel], predicted: &[ClassLabel]) {
        for (y, p) in truth.iter().zip(predicted) {
            if let (Ok(i), Ok(j)) = (self.classes.binary_search(y), self.classes.binary_search(p)) {
                self.counts[i][j] += 1;
            }
        }
    }

    pub fn row_totals(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_inverted() {
        assert_eq!(macro_f1(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(macro_f1(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_fixture() {
        // class 0: P = 1, R = 2/3 -> 0.8; class 1: P = 1/2, R = 1 -> 2/3
        let v = macro_f1(&[0, 0, 0, 1], &[0, 0, 1, 1]).unwrap();
        assert!((v - 11.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn micro_is_accuracy_and_weighted_uses_support() {
        let truth = [0, 0, 0, 1];
        let pred = [0, 0, 1, 1];
        assert!((f1_score(&truth, &pred, F1Average::Micro).unwrap() - 0.75).abs() < 1e-12);
        let w = f1_score(&truth, &pred, F1Average::Weighted).unwrap();
        assert!((w - (0.8 * 3.0 + 2.0 / 3.0) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn absent_predicted_class_only_costs_recall() {
        // class 7 is never true, so it is not averaged
        let v = macro_f1(&[1, 1], &[1, 7]).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(macro_f1(&[1], &[1, 2]), Err(Error::Dimension(_))));
    }

    #[test]
    fn confusion_rows_sum_to_support() {
        let mut c = ConfusionMatrix::new(vec![0, 1]);
        c.add(&[0, 0, 0, 1], &[0, 0, 1, 1]);
        assert_eq!(c.counts, vec![vec![2, 1], vec![0, 1]]);
        assert_eq!(c.row_totals(), vec![3, 1]);
    }
}

//! Row-major feature tables with optional labels, plus their CSV form.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cloud::ClassLabel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    column_names: Vec<String>,
    labels: Option<Vec<ClassLabel>>,
}

impl FeatureMatrix {
    pub fn new(
        rows: usize,
        column_names: Vec<String>,
        values: Vec<f64>,
        labels: Option<Vec<ClassLabel>>,
    ) -> Result<Self> {
        let cols = column_names.len();
        if values.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows} x {cols} matrix needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at row {}, column {}", i / cols.max(1), i % cols.max(1))));
        }
        if let Some(l) = &labels {
            if l.len() != rows {
                return Err(Error::Dimension(format!("{} labels for {rows} rows", l.len())));
            }
        }
        Ok(FeatureMatrix {
            rows,
            cols,
            values,
            column_names,
            labels,
        })
    }

    pub fn from_rows(column_names: Vec<String>, rows: &[Vec<f64>], labels: Option<Vec<ClassLabel>>) -> Result<Self> {
        let cols = column_names.len();
        if let Some(r) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::Dimension(format!("row {r} has {} values, expected {cols}", rows[r].len())));
        }
        let values = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), column_names, values, labels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn labels(&self) -> Option<&[ClassLabel]> {
        self.labels.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(col).step_by(self.cols.max(1)).copied()
    }

    pub fn require_labels(&self) -> Result<&[ClassLabel]> {
        self.labels()
            .ok_or_else(|| Error::LabelsRequired("feature matrix carries no labels".into()))
    }

    pub fn with_labels(mut self, labels: Option<Vec<ClassLabel>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.rows {
                return Err(Error::Dimension(format!("{} labels for {} rows", l.len(), self.rows)));
            }
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn without_labels(&self) -> Self {
        FeatureMatrix {
            labels: None,
            ..self.clone()
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            rows: idx.len(),
            cols: self.cols,
            values,
            column_names: self.column_names.clone(),
            labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&c) = cols.iter().find(|&&c| c >= self.cols) {
            return Err(Error::Dimension(format!("column {c} out of range for {} columns", self.cols)));
        }
        let mut values = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            let row = self.row(r);
            values.extend(cols.iter().map(|&c| row[c]));
        }
        Ok(FeatureMatrix {
            rows: self.rows,
            cols: cols.len(),
            values,
            column_names: cols.iter().map(|&c| self.column_names[c].clone()).collect(),
            labels: self.labels.clone(),
        })
    }

    /// Min-max rescales every column into `[0,1]`; constant columns become 0.5.
    pub fn rescale_columns_unit(&mut self) {
        if self.rows == 0 {
            return;
        }
        for c in 0..self.cols {
            let (lo, hi) = self
                .column(c)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let span = hi - lo;
            for r in 0..self.rows {
                let v = &mut self.values[r * self.cols + c];
                *v = if span > 0.0 { ((*v - lo) / span).clamp(0.0, 1.0) } else { 0.5 };
            }
        }
    }

    /// CSV text with a header row; labels, when present, go in a trailing
    /// `label` column. Floats use the shortest round-trip representation.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.rows * self.cols * 12);
        out.push_str(&self.column_names.join(","));
        if self.labels.is_some() {
            out.push_str(",label");
        }
        out.push('\n');
        for r in 0..self.rows {
            for (c, v) in self.row(r).iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                write!(out, "{v}").unwrap();
            }
            if let Some(l) = &self.labels {
                write!(out, ",{}", l[r]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Parses CSV produced by [`FeatureMatrix::to_csv_string`]. A final
    /// column named `label` becomes the label vector.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Parse { row: 1, reason: e.to_string() })?
            .iter()
            .map(str::to_owned)
            .collect();
        let labeled = header.last().is_some_and(|h| h == "label");
        let names: Vec<String> = if labeled { header[..header.len() - 1].to_vec() } else { header.clone() };
        if names.is_empty() {
            return Err(Error::Parse { row: 1, reason: "no feature columns".into() });
        }
        let mut values = Vec::new();
        let mut labels = Vec::new();
        let mut rows = 0;
        for (i, rec) in reader.records().enumerate() {
            let row = i + 2;
            let rec = rec.map_err(|e| Error::Parse { row, reason: e.to_string() })?;
            for f in rec.iter().take(names.len()) {
                values.push(f.parse::<f64>().map_err(|e| Error::Parse {
                    row,
                    reason: format!("bad value {f:?}: {e}"),
                })?);
            }
            if labeled {
                let f = &rec[names.len()];
                labels.push(f.parse::<ClassLabel>().map_err(|e| Error::Parse {
                    row,
                    reason: format!("bad label {f:?}: {e}"),
                })?);
            }
            rows += 1;
        }
        if rows == 0 {
            return Err(Error::EmptyInput("feature CSV has no rows".into()));
        }
        Self::new(rows, names, values, labeled.then_some(labels))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FeatureMatrix {
        FeatureMatrix::from_rows(
            vec!["a".into(), "b".into()],
            &[vec![1.0, -2.0], vec![3.0, -2.0], vec![2.0, -2.0]],
            Some(vec![1, 2, 1]),
        )
        .unwrap()
    }

    #[test]
    fn rescale_handles_constant_columns() {
        let mut m = sample();
        m.rescale_columns_unit();
        assert_eq!(m.values(), &[0.0, 0.5, 1.0, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let m = FeatureMatrix::from_rows(
            vec!["x".into(), "y".into()],
            &[vec![0.1 + 0.2, 1.0 / 3.0], vec![1e-300, 5.0]],
            Some(vec![4, 9]),
        )
        .unwrap();
        let text = m.to_csv_string();
        assert!(text.starts_with("x,y,label\n"));
        assert_eq!(FeatureMatrix::from_csv_str(&text).unwrap(), m);
    }

    #[test]
    fn selection() {
        let m = sample();
        let s = m.select_rows(&[2, 0]);
        assert_eq!(s.values(), &[2.0, -2.0, 1.0, -2.0]);
        assert_eq!(s.labels().unwrap(), &[1, 1]);
        let c = m.select_columns(&[1]).unwrap();
        assert_eq!(c.column_names(), &["b".to_string()]);
        assert!(m.select_columns(&[2]).is_err());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(FeatureMatrix::new(2, vec!["a".into()], vec![1.0], None).is_err());
        assert!(FeatureMatrix::new(1, vec!["a".into()], vec![f64::NAN], None).is_err());
        assert!(FeatureMatrix::new(1, vec!["a".into()], vec![1.0], Some(vec![1, 2])).is_err());
    }
}

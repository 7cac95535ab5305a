//! Covariance PCA.
//!
//! The covariance of the centered data is diagonalized with cyclic Jacobi
//! rotations, which is exact to rounding for the small (10 x 10) matrices
//! this pipeline produces and is fully deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `components[j]` is the j-th principal direction, i.e. column j of M.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub n: usize,
}

/// Sample covariance `Xc^T Xc / (rows - 1)`, row-major `cols x cols`.
pub fn covariance(x: &FeatureMatrix, mean: &[f64]) -> Vec<f64> {
    let d = x.cols();
    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for r in 0..x.rows() {
        for (c, v) in x.row(r).iter().enumerate() {
            centered[c] = v - mean[c];
        }
        for i in 0..d {
            for j in i..d {
                cov[i * d + j] += centered[i] * centered[j];
            }
        }
    }
    let denom = (x.rows() - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / denom;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    cov
}

/// Eigen-decomposition of a symmetric row-major matrix. Returns eigenvalues in
/// descending order with matching unit eigenvectors.
pub fn symmetric_eigen(matrix: &[f64], d: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(matrix.len(), d * d);
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * d + j] * a[i * d + j])
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * 1e-3 * scale || off == 0.0 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[j * d + j].total_cmp(&a[i * d + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * d + i]).collect();
    let vectors = order.iter().map(|&i| (0..d).map(|k| v[k * d + i]).collect()).collect();
    (values, vectors)
}

/// Flips `v` so its largest-magnitude entry (first one on ties) is positive.
fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Fits `n` principal components. Labels are never read.
pub fn fit_pca(x: &FeatureMatrix, n: usize) -> Result<PcaModel> {
    if n == 0 || n > x.cols() {
        return Err(Error::Dimension(format!("cannot keep {n} components of {} columns", x.cols())));
    }
    if x.rows() < 2 {
        return Err(Error::InsufficientData(format!("PCA needs at least 2 rows, got {}", x.rows())));
    }
    let d = x.cols();
    let mut mean = vec![0.0; d];
    for r in 0..x.rows() {
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= x.rows() as f64);
    let cov = covariance(x, &mean);
    let (values, mut vectors) = symmetric_eigen(&cov, d);
    vectors.truncate(n);
    vectors.iter_mut().for_each(|v| orient(v));
    Ok(PcaModel {
        mean,
        components: vectors,
        eigenvalues: values[..n].to_vec(),
        n,
    })
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    /// `Z = (X - mean) M`; columns are named `pc1..pcn`, labels pass through.
    pub fn transform(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "model expects {} columns, matrix has {}",
                self.input_dim(),
                x.cols()
            )));
        }
        let mut values = Vec::with_capacity(x.rows() * self.n);
        let mut centered = vec![0.0; self.input_dim()];
        for r in 0..x.rows() {
            for (c, v) in x.row(r).iter().enumerate() {
                centered[c] = v - self.mean[c];
            }
            for comp in &self.components {
                values.push(centered.iter().zip(comp).map(|(a, b)| a * b).sum());
            }
        }
        let names = (1..=self.n).map(|i| format!("pc{i}")).collect();
        FeatureMatrix::new(x.rows(), names, values, x.labels().map(<[_]>::to_vec))
    }

    /// Maps projected rows back: `Z M^T + mean`.
    pub fn inverse_transform(&self, z: &FeatureMatrix) -> Result<FeatureMatrix> {
        if z.cols() != self.n {
            return Err(Error::Dimension(format!("expected {} components, got {}", self.n, z.cols())));
        }
        let d = self.input_dim();
        let mut values = Vec::with_capacity(z.rows() * d);
        for r in 0..z.rows() {
            let row = z.row(r);
            for c in 0..d {
                values.push(self.mean[c] + self.components.iter().zip(row).map(|(m, s)| m[c] * s).sum::<f64>());
            }
        }
        let names = (1..=d).map(|i| format!("x{i}")).collect();
        FeatureMatrix::new(z.rows(), names, values, z.labels().map(<[_]>::to_vec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
        let names = (0..rows[0].len()).map(|i| format!("c{i}")).collect();
        FeatureMatrix::from_rows(names, rows, None).unwrap()
    }

    #[test]
    fn axis_aligned_data() {
        let x = matrix(&(0..4).map(|t| vec![t as f64, 0.0, 0.0]).collect::<Vec<_>>());
        let m = fit_pca(&x, 3).unwrap();
        assert_eq!(m.components[0], vec![1.0, 0.0, 0.0]);
        assert!((m.eigenvalues[0] - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(&m.eigenvalues[1..], &[0.0, 0.0]);
    }

    #[test]
    fn isotropic_cube_corners() {
        let mut rows = Vec::new();
        for i in 0..8 {
            rows.push(vec![(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        let x = matrix(&rows);
        let m = fit_pca(&x, 3).unwrap();
        for e in &m.eigenvalues {
            assert!((e - m.eigenvalues[0]).abs() < 1e-12);
        }
        let z = m.transform(&x).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let d = |mm: &FeatureMatrix| -> f64 {
                    mm.row(i).iter().zip(mm.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
                };
                assert!((d(&x) - d(&z)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mean_row_projects_to_zero() {
        let x = matrix(&[vec![1.0, 2.0], vec![3.0, 1.0], vec![2.0, 6.0]]);
        let m = fit_pca(&x, 2).unwrap();
        let mean_rows = matrix(&[m.mean.clone(), m.mean.clone()]);
        let z = m.transform(&mean_rows).unwrap();
        assert!(z.values().iter().all(|v| v.abs() < 1e-15));
        assert_eq!(z.column_names(), &["pc1".to_string(), "pc2".to_string()]);
    }

    #[test]
    fn sign_convention_largest_entry_positive() {
        let x = matrix(&[vec![0.0, 0.0], vec![-1.0, -2.0], vec![1.0, 2.0], vec![2.0, 3.9]]);
        let m = fit_pca(&x, 2).unwrap();
        for comp in &m.components {
            let big = comp.iter().cloned().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn errors() {
        let x = matrix(&[vec![1.0, 2.0], vec![3.0, 1.0]]);
        assert!(matches!(fit_pca(&x, 3), Err(Error::Dimension(_))));
        assert!(matches!(fit_pca(&x, 0), Err(Error::Dimension(_))));
        let one = matrix(&[vec![1.0, 2.0]]);
        assert!(matches!(fit_pca(&one, 1), Err(Error::InsufficientData(_))));
        let m = fit_pca(&x, 1).unwrap();
        assert!(m.transform(&matrix(&[vec![1.0, 2.0, 3.0]])).is_err());
    }

    #[test]
    fn json_shape() {
        let x = matrix(&[vec![1.0, 2.0], vec![3.0, 1.0], vec![0.0, 0.0]]);
        let v = serde_json::to_value(fit_pca(&x, 1).unwrap()).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, vec!["components", "eigenvalues", "mean", "n"]);
    }
}

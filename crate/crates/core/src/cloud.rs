//! In-memory point clouds and unit-cube normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ASPRS-style integer class code. Treated as an opaque identifier.
pub type ClassLabel = u32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub label: Option<ClassLabel>,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z, label: None }
    }

    pub fn labeled(x: f64, y: f64, z: f64, label: ClassLabel) -> Self {
        Point3 {
            x,
            y,
            z,
            label: Some(label),
        }
    }

    #[inline]
    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Squared Euclidean distance. Every neighborhood predicate in the crate
    /// goes through this one expression so kd-tree and scan results agree
    /// bit for bit.
    #[inline]
    pub fn distance_squared(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }
}

/// Per-axis coordinate extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Bounds {
    pub fn of(points: &[Point3]) -> Option<Bounds> {
        let first = points.first()?;
        let mut b = Bounds {
            min: first.coords(),
            max: first.coords(),
        };
        for p in &points[1..] {
            for (axis, v) in p.coords().into_iter().enumerate() {
                b.min[axis] = b.min[axis].min(v);
                b.max[axis] = b.max[axis].max(v);
            }
        }
        Some(b)
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.max[axis] - self.min[axis]
    }
}

/// How coordinates are mapped into `[0,1]^3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizeMode {
    /// Independent min-max per axis; the cloud spans the full cube.
    #[default]
    PerAxis,
    /// One scale for all axes (the largest extent); aspect ratio is kept.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub source: String,
    pub normalized: bool,
    /// Extent of the original, un-normalized coordinates.
    pub bounds: Bounds,
}

impl PointCloud {
    /// Builds a cloud, rejecting empty input and non-finite coordinates.
    pub fn new(points: Vec<Point3>, source: impl Into<String>) -> Result<Self> {
        if let Some((i, _)) = points.iter().enumerate().find(|(_, p)| !p.is_finite()) {
            return Err(Error::Domain(format!("point {i} has a non-finite coordinate")));
        }
        let bounds = Bounds::of(&points).ok_or_else(|| Error::EmptyInput("point cloud has no points".into()))?;
        Ok(PointCloud {
            points,
            source: source.into(),
            normalized: false,
            bounds,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn labels(&self) -> Option<Vec<ClassLabel>> {
        self.points.iter().map(|p| p.label).collect()
    }

    pub fn has_labels(&self) -> bool {
        !self.points.is_empty() && self.points.iter().all(|p| p.label.is_some())
    }
}

/// Maps the cloud into the unit cube.
///
/// Per-axis mode applies `(v - min) / (max - min)` independently; an axis with
/// zero extent maps to the constant 0.5. Uniform mode divides every axis by
/// the largest extent. Point order and labels are preserved and `bounds`
/// keeps the original extent.
pub fn normalize_unit_cube(cloud: PointCloud, mode: NormalizeMode) -> Result<PointCloud> {
    if cloud.points.is_empty() {
        return Err(Error::EmptyInput("cannot normalize an empty cloud".into()));
    }
    if cloud.normalized {
        return Err(Error::Configuration("cloud is already normalized".into()));
    }
    let bounds = Bounds::of(&cloud.points).expect("non-empty");
    let scale: [f64; 3] = match mode {
        NormalizeMode::PerAxis => [bounds.extent(0), bounds.extent(1), bounds.extent(2)],
        NormalizeMode::Uniform => {
            let widest = bounds.extent(0).max(bounds.extent(1)).max(bounds.extent(2));
            [widest; 3]
        }
    };
    let map = |v: f64, axis: usize| -> f64 {
        if scale[axis] > 0.0 {
            ((v - bounds.min[axis]) / scale[axis]).clamp(0.0, 1.0)
        } else {
            0.5
        }
    };
    let points = cloud
        .points
        .iter()
        .map(|p| Point3 {
            x: map(p.x, 0),
            y: map(p.y, 1),
            z: map(p.z, 2),
            label: p.label,
        })
        .collect();
    Ok(PointCloud {
        points,
        source: cloud.source,
        normalized: true,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(pts: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(pts.iter().map(|c| Point3::new(c[0], c[1], c[2])).collect(), "test").unwrap()
    }

    fn coords(c: &PointCloud) -> Vec<[f64; 3]> {
        c.points.iter().map(Point3::coords).collect()
    }

    #[test]
    fn endpoints_map_to_cube_corners() {
        let n = normalize_unit_cube(cloud(&[[0.0, 0.0, 0.0], [2.0, 4.0, 8.0]]), NormalizeMode::PerAxis).unwrap();
        assert_eq!(coords(&n), vec![[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]);
        assert!(n.normalized);
        assert_eq!(n.bounds.max, [2.0, 4.0, 8.0]);
    }

    #[test]
    fn degenerate_axis_maps_to_half() {
        let n = normalize_unit_cube(cloud(&[[1.0, 1.0, 1.0], [3.0, 1.0, 5.0]]), NormalizeMode::PerAxis).unwrap();
        assert_eq!(coords(&n), vec![[0.0, 0.5, 0.0], [1.0, 0.5, 1.0]]);
    }

    #[test]
    fn uniform_mode_keeps_aspect_ratio() {
        let n = normalize_unit_cube(cloud(&[[0.0, 0.0, 0.0], [4.0, 2.0, 1.0]]), NormalizeMode::Uniform).unwrap();
        assert_eq!(coords(&n)[1], [1.0, 0.5, 0.25]);
    }

    #[test]
    fn random_points_match_direct_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let raw: Vec<[f64; 3]> = (0..100)
            .map(|_| [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)])
            .collect();
        let n = normalize_unit_cube(cloud(&raw), NormalizeMode::PerAxis).unwrap();
        for axis in 0..3 {
            let lo = raw.iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min);
            let hi = raw.iter().map(|p| p[axis]).fold(f64::NEG_INFINITY, f64::max);
            for (orig, out) in raw.iter().zip(coords(&n)) {
                assert_eq!(out[axis], (orig[axis] - lo) / (hi - lo));
                assert!((0.0..=1.0).contains(&out[axis]));
            }
        }
    }

    #[test]
    fn unit_range_data_is_a_fixed_point() {
        let raw = [[0.0, 0.25, 1.0], [1.0, 0.0, 0.5], [0.3, 1.0, 0.0]];
        let n = normalize_unit_cube(cloud(&raw), NormalizeMode::PerAxis).unwrap();
        for (a, b) in raw.iter().zip(coords(&n)) {
            for axis in 0..3 {
                assert!((a[axis] - b[axis]).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn rejects_empty_and_double_normalization() {
        assert!(matches!(PointCloud::new(vec![], "x"), Err(Error::EmptyInput(_))));
        let n = normalize_unit_cube(cloud(&[[0.0, 0.0, 0.0]]), NormalizeMode::PerAxis).unwrap();
        assert!(normalize_unit_cube(n, NormalizeMode::PerAxis).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let err = PointCloud::new(vec![Point3::new(0.0, f64::NAN, 0.0)], "x").unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }
}

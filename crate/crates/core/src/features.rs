//! Per-point product-coefficient features.
//!
//! For each point the neighbors inside a sphere around it form the root set
//! of a depth-3 dyadic tree. The root is split by the plane `x = x_i`, each
//! child by `y = y_i`, and each grandchild by `z = z_i`; coordinates equal to
//! the center's go left. The counting measure of that tree yields seven
//! product coefficients (one at level 0, two at level 1, four at level 2),
//! which are appended to the point's own coordinates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{Point3, PointCloud};
use crate::dyadic::{coefficients_from_measure, DyadicTree};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::spatial::{KdTree, NeighborSearch};

/// Split levels of the per-point tree: x, then y, then z.
pub const SPLIT_DEPTH: u32 = 3;

pub const COEFFICIENT_COLUMNS: [&str; 7] = ["a_s", "a_ls", "a_rs", "a_lls", "a_rls", "a_lrs", "a_rrs"];
pub const SPATIAL_COLUMNS: [&str; 3] = ["x", "y", "z"];

pub fn feature_column_names() -> Vec<String> {
    SPATIAL_COLUMNS.iter().chain(COEFFICIENT_COLUMNS.iter()).map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSpec {
    pub radius: f64,
    pub include_center: bool,
}

impl Default for NeighborhoodSpec {
    fn default() -> Self {
        NeighborhoodSpec {
            radius: 2.0,
            include_center: true,
        }
    }
}

impl NeighborhoodSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::Configuration(format!("radius must be positive, got {}", self.radius)));
        }
        Ok(())
    }
}

/// The seven coefficients of one point in level order, plus the size of its
/// neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcFeatureRow {
    pub a_s: f64,
    pub a_ls: f64,
    pub a_rs: f64,
    pub a_lls: f64,
    pub a_rls: f64,
    pub a_lrs: f64,
    pub a_rrs: f64,
    pub neighbor_count: u64,
}

impl PcFeatureRow {
    pub fn coefficients(&self) -> [f64; 7] {
        [self.a_s, self.a_ls, self.a_rs, self.a_lls, self.a_rls, self.a_lrs, self.a_rrs]
    }
}

/// Leaf slot (0..8, left to right) of `p` in the tree centered at `center`.
#[inline]
fn leaf_slot(p: &Point3, center: &Point3) -> usize {
    let bit = |v: f64, c: f64| usize::from(v > c);
    (bit(p.x, center.x) << 2) | (bit(p.y, center.y) << 1) | bit(p.z, center.z)
}

/// Depth-3 counting measure of `neighbors` sliced through `center`.
pub fn dyadic_measure_from_sphere<'p>(
    neighbors: impl IntoIterator<Item = &'p Point3>,
    center: &Point3,
) -> Result<DyadicTree> {
    let mut counts = [0u64; 8];
    for p in neighbors {
        counts[leaf_slot(p, center)] += 1;
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::EmptyInput("neighborhood is empty".into()));
    }
    DyadicTree::from_leaf_counts(SPLIT_DEPTH, &counts)
}

pub fn point_product_coefficients(tree: &DyadicTree) -> Result<PcFeatureRow> {
    if tree.depth() != SPLIT_DEPTH {
        return Err(Error::Dimension(format!("expected a depth-{SPLIT_DEPTH} tree, got depth {}", tree.depth())));
    }
    let c = coefficients_from_measure(tree)?;
    Ok(PcFeatureRow {
        a_s: c.a[0],
        a_ls: c.a[1],
        a_rs: c.a[2],
        a_lls: c.a[3],
        a_rls: c.a[4],
        a_lrs: c.a[5],
        a_rrs: c.a[6],
        neighbor_count: c.root_mass as u64,
    })
}

/// Coefficients of point `i` using `index` for the neighborhood query.
pub fn point_features(
    points: &[Point3],
    index: &dyn NeighborSearch,
    i: usize,
    spec: &NeighborhoodSpec,
) -> Result<PcFeatureRow> {
    let center = &points[i];
    let mut counts = [0u64; 8];
    index.for_each_within(center, spec.radius, &mut |j| {
        if spec.include_center || j != i {
            counts[leaf_slot(&points[j], center)] += 1;
        }
    });
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::EmptyNeighborhood(i));
    }
    let tree = DyadicTree::from_leaf_counts(SPLIT_DEPTH, &counts)?;
    point_product_coefficients(&tree)
}

/// Raw coefficient rows for every point, in cloud order.
pub fn coefficient_rows(cloud: &PointCloud, index: &dyn NeighborSearch, spec: &NeighborhoodSpec) -> Result<Vec<PcFeatureRow>> {
    spec.validate()?;
    (0..cloud.len())
        .into_par_iter()
        .map(|i| point_features(&cloud.points, index, i, spec))
        .collect()
}

/// Builds the 10-column feature matrix `x, y, z, a_s .. a_rrs` with every
/// column min-max rescaled into `[0,1]`.
pub fn extract_features(cloud: &PointCloud, spec: &NeighborhoodSpec) -> Result<FeatureMatrix> {
    let index = KdTree::new(&cloud.points);
    extract_features_with(cloud, spec, &index)
}

/// [`extract_features`] with a caller-supplied neighbor search.
pub fn extract_features_with(cloud: &PointCloud, spec: &NeighborhoodSpec, index: &dyn NeighborSearch) -> Result<FeatureMatrix> {
    spec.validate()?;
    if !cloud.normalized {
        return Err(Error::Configuration("feature extraction needs a normalized cloud".into()));
    }
    if cloud.is_empty() {
        return Err(Error::EmptyInput("point cloud has no points".into()));
    }
    let rows = coefficient_rows(cloud, index, spec)?;
    let mut values = Vec::with_capacity(cloud.len() * 10);
    for (p, row) in cloud.points.iter().zip(&rows) {
        values.extend_from_slice(&p.coords());
        values.extend_from_slice(&row.coefficients());
    }
    let labels = cloud.has_labels().then(|| cloud.labels().unwrap());
    let mut m = FeatureMatrix::new(cloud.len(), feature_column_names(), values, labels)?;
    m.rescale_columns_unit();
    Ok(m)
}

/// Smallest radius (to within 1e-4) whose median neighborhood size reaches
/// `target`, estimated on up to `sample` evenly spaced points.
pub fn radius_for_median_neighbors(cloud: &PointCloud, target: usize, sample: usize) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput("point cloud has no points".into()));
    }
    if target == 0 || target > cloud.len() {
        return Err(Error::Configuration(format!("target {target} not in 1..={}", cloud.len())));
    }
    let index = KdTree::new(&cloud.points);
    let step = (cloud.len() / sample.max(1)).max(1);
    let probes: Vec<&Point3> = cloud.points.iter().step_by(step).collect();
    let median_at = |r: f64| {
        let mut sizes: Vec<usize> = probes
            .iter()
            .map(|c| {
                let mut n = 0;
                index.for_each_within(c, r, &mut |_| n += 1);
                n
            })
            .collect();
        sizes.sort_unstable();
        sizes[sizes.len() / 2]
    };
    let (mut lo, mut hi) = (0.0, 2.0);
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if median_at(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{normalize_unit_cube, NormalizeMode};
    use crate::dyadic::NodeId;
    use crate::spatial::LinearScan;

    #[test]
    fn center_only_goes_left_everywhere() {
        let c = Point3::new(0.2, 0.4, 0.6);
        let tree = dyadic_measure_from_sphere([&c], &c).unwrap();
        assert_eq!(tree.root_mass(), 1.0);
        assert_eq!(tree.mass(NodeId(2)), 1.0);
        assert_eq!(tree.mass(NodeId(3)), 0.0);
        assert_eq!(tree.mass(NodeId(8)), 1.0);
        let row = point_product_coefficients(&tree).unwrap();
        assert_eq!(row.coefficients(), [1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(row.neighbor_count, 1);
    }

    #[test]
    fn symmetric_corners_balance() {
        let c = Point3::new(0.5, 0.5, 0.5);
        let d = 0.1;
        let mut pts = Vec::new();
        for sx in [-d, d] {
            for sy in [-d, d] {
                for sz in [-d, d] {
                    pts.push(Point3::new(0.5 + sx, 0.5 + sy, 0.5 + sz));
                }
            }
        }
        let tree = dyadic_measure_from_sphere(&pts, &c).unwrap();
        assert_eq!(tree.root_mass(), 8.0);
        for n in 2..=3 {
            assert_eq!(tree.mass(NodeId(n)), 4.0);
        }
        for n in 4..=7 {
            assert_eq!(tree.mass(NodeId(n)), 2.0);
        }
        for n in 8..=15 {
            assert_eq!(tree.mass(NodeId(n)), 1.0);
        }
        assert_eq!(point_product_coefficients(&tree).unwrap().coefficients(), [0.0; 7]);
    }

    #[test]
    fn injected_root_split_matches_scale_zero_example() {
        // leaves 1:3 between the x-halves, each half split evenly below
        let tree = DyadicTree::from_leaves(3, &[0.0625, 0.0625, 0.0625, 0.0625, 0.1875, 0.1875, 0.1875, 0.1875]).unwrap();
        assert_eq!(tree.root_mass(), 1.0);
        assert_eq!(point_product_coefficients(&tree).unwrap().a_s, -0.5);
    }

    #[test]
    fn empty_neighborhood_is_an_error() {
        let c = Point3::new(0.0, 0.0, 0.0);
        assert!(dyadic_measure_from_sphere(std::iter::empty(), &c).is_err());
    }

    #[test]
    fn two_point_cloud_by_hand() {
        let cloud = PointCloud::new(vec![Point3::labeled(0.0, 0.0, 0.0, 1), Point3::labeled(1.0, 1.0, 1.0, 2)], "t").unwrap();
        let cloud = normalize_unit_cube(cloud, NormalizeMode::PerAxis).unwrap();
        let raw = coefficient_rows(&cloud, &LinearScan::new(&cloud.points), &NeighborhoodSpec::default()).unwrap();
        // point 0: x-split 1/1; the left half keeps y <= 0, the right half y > 0
        assert_eq!(raw[0].coefficients(), [0.0, 1.0, -1.0, 1.0, 0.0, 0.0, -1.0]);
        assert_eq!(raw[1].coefficients(), [1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(raw.iter().all(|r| r.neighbor_count == 2));

        let m = extract_features(&cloud, &NeighborhoodSpec::default()).unwrap();
        assert_eq!(m.cols(), 10);
        assert_eq!(m.row(0), &[0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0]);
        assert_eq!(m.row(1), &[1.0, 1.0, 1.0, 1.0, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0]);
        assert_eq!(m.labels().unwrap(), &[1, 2]);
    }

    #[test]
    fn excluding_the_center_can_empty_a_neighborhood() {
        let cloud = PointCloud::new(vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0)], "t").unwrap();
        let cloud = normalize_unit_cube(cloud, NormalizeMode::PerAxis).unwrap();
        let spec = NeighborhoodSpec {
            radius: 0.5,
            include_center: false,
        };
        assert!(matches!(extract_features(&cloud, &spec), Err(Error::EmptyNeighborhood(0))));
    }

    #[test]
    fn requires_normalized_cloud_and_positive_radius() {
        let cloud = PointCloud::new(vec![Point3::new(0.0, 0.0, 0.0)], "t").unwrap();
        assert!(matches!(extract_features(&cloud, &NeighborhoodSpec::default()), Err(Error::Configuration(_))));
        let cloud = normalize_unit_cube(cloud, NormalizeMode::PerAxis).unwrap();
        let spec = NeighborhoodSpec {
            radius: 0.0,
            include_center: true,
        };
        assert!(matches!(extract_features(&cloud, &spec), Err(Error::Configuration(_))));
    }
}

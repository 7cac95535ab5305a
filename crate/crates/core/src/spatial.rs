//! Radius queries over 3-D points.

use crate::cloud::Point3;

pub const DEFAULT_LEAF_SIZE: usize = 16;

/// Fixed-radius neighbor search.
pub trait NeighborSearch: Sync {
    /// Calls `visit` with the id of every point `p` satisfying
    /// `|p - center|^2 <= radius^2`. Visit order is unspecified.
    fn for_each_within(&self, center: &Point3, radius: f64, visit: &mut dyn FnMut(usize));

    /// Ids within `radius`, sorted ascending.
    fn radius_neighbors(&self, center: &Point3, radius: f64) -> Vec<usize> {
        let mut ids = Vec::new();
        self.for_each_within(center, radius, &mut |i| ids.push(i));
        ids.sort_unstable();
        ids
    }
}

/// Brute-force scan over every point.
pub struct LinearScan<'a> {
    points: &'a [Point3],
}

impl<'a> LinearScan<'a> {
    pub fn new(points: &'a [Point3]) -> Self {
        LinearScan { points }
    }
}

impl NeighborSearch for LinearScan<'_> {
    fn for_each_within(&self, center: &Point3, radius: f64, visit: &mut dyn FnMut(usize)) {
        let r2 = radius * radius;
        for (i, p) in self.points.iter().enumerate() {
            if p.distance_squared(center) <= r2 {
                visit(i);
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    lo: [f64; 3],
    hi: [f64; 3],
    /// Range into `KdTree::order`.
    start: usize,
    end: usize,
    /// Child node indices; `usize::MAX` for leaves.
    children: [usize; 2],
}

/// Balanced kd-tree split at the median of the widest axis.
pub struct KdTree<'a> {
    points: &'a [Point3],
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a [Point3]) -> Self {
        Self::with_leaf_size(points, DEFAULT_LEAF_SIZE)
    }

    pub fn with_leaf_size(points: &'a [Point3], leaf_size: usize) -> Self {
        let mut tree = KdTree {
            points,
            order: (0..points.len()).collect(),
            nodes: Vec::with_capacity(2 * points.len() / leaf_size.max(1) + 1),
        };
        if !points.is_empty() {
            tree.build(0, points.len(), leaf_size.max(1));
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build(&mut self, start: usize, end: usize, leaf_size: usize) -> usize {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            for (axis, v) in self.points[i].coords().into_iter().enumerate() {
                lo[axis] = lo[axis].min(v);
                hi[axis] = hi[axis].max(v);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            start,
            end,
            children: [usize::MAX; 2],
        });
        if end - start <= leaf_size {
            return id;
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap();
        if hi[axis] == lo[axis] {
            // every point coincides
            return id;
        }
        let mid = start + (end - start) / 2;
        let pts = self.points;
        self.order[start..end]
            .select_nth_unstable_by(mid - start, |&a, &b| pts[a].coords()[axis].total_cmp(&pts[b].coords()[axis]));
        let left = self.build(start, mid, leaf_size);
        let right = self.build(mid, end, leaf_size);
        self.nodes[id].children = [left, right];
        id
    }

    fn box_min_distance_squared(node: &Node, c: &[f64; 3]) -> f64 {
        let mut d = 0.0;
        for ((&x, &lo), &hi) in c.iter().zip(&node.lo).zip(&node.hi) {
            let delta = if x < lo {
                lo - x
            } else if x > hi {
                x - hi
            } else {
                0.0
            };
            d += delta * delta;
        }
        d
    }

    /// Squared distance to the farthest box corner, computed with the same
    /// operation order as `Point3::distance_squared`. Rounding is monotone, so
    /// every point in the box is at most this far in floating point too.
    fn box_max_distance_squared(node: &Node, c: &Point3) -> f64 {
        let far = |axis: usize, v: f64| {
            if (v - node.lo[axis]).abs() > (node.hi[axis] - v).abs() {
                node.lo[axis]
            } else {
                node.hi[axis]
            }
        };
        let corner = Point3::new(far(0, c.x), far(1, c.y), far(2, c.z));
        corner.distance_squared(c)
    }
}

impl NeighborSearch for KdTree<'_> {
    fn for_each_within(&self, center: &Point3, radius: f64, visit: &mut dyn FnMut(usize)) {
        if self.nodes.is_empty() {
            return;
        }
        let r2 = radius * radius;
        let c = center.coords();
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if Self::box_min_distance_squared(node, &c) > r2 {
                continue;
            }
            let members = &self.order[node.start..node.end];
            if Self::box_max_distance_squared(node, center) <= r2 {
                members.iter().for_each(|&i| visit(i));
                continue;
            }
            if node.children[0] == usize::MAX {
                for &i in members {
                    if self.points[i].distance_squared(center) <= r2 {
                        visit(i);
                    }
                }
            } else {
                stack.extend(node.children);
            }
        }
    }
}

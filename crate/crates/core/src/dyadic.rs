//! Dyadic measures and their product-coefficient representation.
//!
//! A dyadic set `X` is split recursively into left and right children,
//! forming a complete binary tree. Nodes are stored in level order with the
//! root at index 1 and the children of node `i` at `2i` (left) and `2i + 1`
//! (right), so a tree of depth `d` has nodes `1..2^(d+1)` and leaves
//! `2^d..2^(d+1)`.
//!
//! For a non-negative additive measure `mu` the product coefficient of a node
//! `S` solves
//!
//! ```text
//! mu(L(S)) = (1 + a_S) mu(S) / 2
//! mu(R(S)) = (1 - a_S) mu(S) / 2
//! ```
//!
//! and is defined as zero when `mu(S) = 0`. Conversely a root mass together
//! with coefficients in `[-1, 1]` determines the measure through the product
//! formula `mu = mu(X) * prod_S (1 + a_S h_S) dy`, where `h_S` is the
//! Haar-like function of `S` and `dy` the naive measure halving at each level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute additivity tolerance for real-valued masses.
pub const ADDITIVITY_TOLERANCE: f64 = 1e-12;

/// Position of a node in a level-order complete binary tree (root = 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const ROOT: NodeId = NodeId(1);

    #[inline]
    pub fn level(self) -> u32 {
        debug_assert!(self.0 >= 1);
        usize::BITS - 1 - self.0.leading_zeros()
    }

    #[inline]
    pub fn left(self) -> NodeId {
        NodeId(2 * self.0)
    }

    #[inline]
    pub fn right(self) -> NodeId {
        NodeId(2 * self.0 + 1)
    }

    /// Ancestor of `self` at `level`, or `None` when `level` is below it.
    #[inline]
    pub fn ancestor_at(self, level: u32) -> Option<NodeId> {
        let own = self.level();
        (level <= own).then(|| NodeId(self.0 >> (own - level)))
    }

    /// Naive measure: `dy(X) = 1` and each child carries half its parent.
    pub fn naive_measure(self) -> f64 {
        0.5f64.powi(self.level() as i32)
    }
}

/// Number of nodes (leaves included) in a complete tree of `depth` split levels.
#[inline]
pub fn node_count(depth: u32) -> usize {
    (1usize << (depth + 1)) - 1
}

/// Non-leaf nodes, i.e. the nodes that carry a product coefficient.
#[inline]
pub fn interior_count(depth: u32) -> usize {
    (1usize << depth) - 1
}

fn leaves(depth: u32) -> std::ops::Range<usize> {
    (1usize << depth)..(1usize << (depth + 1))
}

/// Node masses of a dyadic measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicTree {
    depth: u32,
    /// `mass[i - 1]` is the measure of node `i`.
    mass: Vec<f64>,
}

impl DyadicTree {
    /// Wraps level-order node masses after checking non-negativity and
    /// additivity. Integer-valued masses must add up exactly.
    pub fn from_masses(depth: u32, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != node_count(depth) {
            return Err(Error::Dimension(format!(
                "depth {depth} needs {} node masses, got {}",
                node_count(depth),
                mass.len()
            )));
        }
        for (i, m) in mass.iter().enumerate() {
            if !(m.is_finite() && *m >= 0.0) {
                return Err(Error::Domain(format!("node {} has invalid mass {m}", i + 1)));
            }
        }
        let tree = DyadicTree { depth, mass };
        tree.check_additivity()?;
        Ok(tree)
    }

    /// Builds the tree from leaf masses (left to right), summing upward.
    pub fn from_leaves(depth: u32, leaf_mass: &[f64]) -> Result<Self> {
        if leaf_mass.len() != 1 << depth {
            return Err(Error::Dimension(format!(
                "depth {depth} has {} leaves, got {}",
                1usize << depth,
                leaf_mass.len()
            )));
        }
        let mut mass = vec![0.0; node_count(depth)];
        let first_leaf = 1usize << depth;
        for (k, m) in leaf_mass.iter().enumerate() {
            if !(m.is_finite() && *m >= 0.0) {
                return Err(Error::Domain(format!("leaf {} has invalid mass {m}", first_leaf + k)));
            }
            mass[first_leaf + k - 1] = *m;
        }
        for i in (1..first_leaf).rev() {
            mass[i - 1] = mass[2 * i - 1] + mass[2 * i];
        }
        Ok(DyadicTree { depth, mass })
    }

    /// Counting measure from per-leaf point counts.
    pub fn from_leaf_counts(depth: u32, counts: &[u64]) -> Result<Self> {
        let leaf: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        Self::from_leaves(depth, &leaf)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn mass(&self, node: NodeId) -> f64 {
        self.mass[node.0 - 1]
    }

    pub fn root_mass(&self) -> f64 {
        self.mass[0]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.0 >= 1 && node.0 <= self.mass.len()
    }

    pub fn is_leaf(&self, node: NodeId) -> bool {
        leaves(self.depth).contains(&node.0)
    }

    fn check_additivity(&self) -> Result<()> {
        for i in 1..=interior_count(self.depth) {
            let node = NodeId(i);
            let parent = self.mass(node);
            let children = self.mass(node.left()) + self.mass(node.right());
            let integral = [parent, self.mass(node.left()), self.mass(node.right())]
                .iter()
                .all(|m| m.fract() == 0.0 && *m < 2f64.powi(53));
            let ok = if integral {
                parent == children
            } else {
                (parent - children).abs() <= ADDITIVITY_TOLERANCE
            };
            if !ok {
                return Err(Error::InconsistentMeasure {
                    node: i,
                    reason: format!("mass {parent} differs from children sum {children}"),
                });
            }
        }
        Ok(())
    }
}

/// Root mass plus one product coefficient per non-leaf node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTree {
    pub depth: u32,
    pub root_mass: f64,
    /// Level-order coefficients: `a[i - 1]` belongs to node `i`.
    pub a: Vec<f64>,
}

impl CoefficientTree {
    pub fn new(depth: u32, root_mass: f64, a: Vec<f64>) -> Result<Self> {
        let tree = CoefficientTree { depth, root_mass, a };
        tree.validate()?;
        Ok(tree)
    }

    pub fn coefficient(&self, node: NodeId) -> f64 {
        self.a[node.0 - 1]
    }

    /// Checks ranges and the extremal-coefficient constraints: `a_S = 1`
    /// forces every coefficient under `R(S)` to zero, and `a_S = -1` every
    /// coefficient under `L(S)`.
    pub fn validate(&self) -> Result<()> {
        if self.a.len() != interior_count(self.depth) {
            return Err(Error::Dimension(format!(
                "depth {} needs {} coefficients, got {}",
                self.depth,
                interior_count(self.depth),
                self.a.len()
            )));
        }
        if !(self.root_mass.is_finite() && self.root_mass >= 0.0) {
            return Err(Error::Domain(format!("invalid root mass {}", self.root_mass)));
        }
        for (i, a) in self.a.iter().enumerate() {
            if !(a.is_finite() && (-1.0..=1.0).contains(a)) {
                return Err(Error::Domain(format!("coefficient of node {} is {a}, outside [-1, 1]", i + 1)));
            }
        }
        for i in 1..=self.a.len() {
            let node = NodeId(i);
            let a = self.coefficient(node);
            let emptied = if a == 1.0 {
                node.right()
            } else if a == -1.0 {
                node.left()
            } else {
                continue;
            };
            if let Some(bad) = self.nonzero_in_subtree(emptied) {
                return Err(Error::Constraint {
                    node: i,
                    reason: format!("a = {a} but node {} under the empty child has coefficient {}", bad.0, self.coefficient(bad)),
                });
            }
        }
        Ok(())
    }

    fn nonzero_in_subtree(&self, top: NodeId) -> Option<NodeId> {
        let interior = interior_count(self.depth);
        let mut frontier = vec![top];
        while let Some(n) = frontier.pop() {
            if n.0 > interior {
                continue;
            }
            if self.coefficient(n) != 0.0 {
                return Some(n);
            }
            frontier.push(n.left());
            frontier.push(n.right());
        }
        None
    }
}

/// Signed left/right imbalance `(mu(L) - mu(R)) / mu(S)` with
/// `mu(R) = mu(S) - mu(L)`; zero for an empty parent.
pub fn product_coefficient(mu_parent: f64, mu_left: f64) -> Result<f64> {
    if !(mu_parent.is_finite() && mu_left.is_finite()) || mu_parent < 0.0 || mu_left < 0.0 {
        return Err(Error::Domain(format!(
            "masses must be finite and non-negative (parent {mu_parent}, left {mu_left})"
        )));
    }
    if mu_left > mu_parent {
        return Err(Error::Domain(format!("left mass {mu_left} exceeds parent mass {mu_parent}")));
    }
    if mu_parent == 0.0 {
        return Ok(0.0);
    }
    let mu_right = mu_parent - mu_left;
    Ok(((mu_left - mu_right) / mu_parent).clamp(-1.0, 1.0))
}

/// Product coefficients of every non-leaf node.
pub fn coefficients_from_measure(tree: &DyadicTree) -> Result<CoefficientTree> {
    tree.check_additivity()?;
    let a = (1..=interior_count(tree.depth))
        .map(|i| {
            let node = NodeId(i);
            let parent = tree.mass(node);
            // Real-valued masses may overshoot the parent by rounding.
            let left = tree.mass(node.left()).min(parent);
            product_coefficient(parent, left)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoefficientTree {
        depth: tree.depth,
        root_mass: tree.root_mass(),
        a,
    })
}

/// Haar-like function of node `S` evaluated on a leaf: `+1` below `L(S)`,
/// `-1` below `R(S)` and `0` outside `S`.
pub fn haar_value(depth: u32, node: NodeId, leaf: NodeId) -> Result<i8> {
    if node.0 == 0 || node.0 > interior_count(depth) {
        return Err(Error::Index(format!("node {} is not a non-leaf node at depth {depth}", node.0)));
    }
    if !leaves(depth).contains(&leaf.0) {
        return Err(Error::Index(format!("index {} is not a leaf at depth {depth}", leaf.0)));
    }
    Ok(haar_unchecked(node, leaf))
}

#[inline]
fn haar_unchecked(node: NodeId, leaf: NodeId) -> i8 {
    let level = node.level();
    if leaf.ancestor_at(level) != Some(node) {
        return 0;
    }
    match leaf.ancestor_at(level + 1) {
        Some(child) if child == node.left() => 1,
        _ => -1,
    }
}

/// Rebuilds the measure from its product formula. Each leaf receives
/// `root_mass * 2^-depth * prod_S (1 + a_S h_S(leaf))`; interior nodes are
/// sums of their leaves.
pub fn measure_from_coefficients(coeffs: &CoefficientTree) -> Result<DyadicTree> {
    coeffs.validate()?;
    let depth = coeffs.depth;
    let naive_leaf = 0.5f64.powi(depth as i32);
    let leaf_mass: Vec<f64> = leaves(depth)
        .map(|l| {
            let leaf = NodeId(l);
            let product: f64 = (0..depth)
                .map(|level| {
                    let s = leaf.ancestor_at(level).expect("leaf is below every level");
                    1.0 + coeffs.coefficient(s) * f64::from(haar_unchecked(s, leaf))
                })
                .product();
            coeffs.root_mass * naive_leaf * product
        })
        .collect();
    DyadicTree::from_leaves(depth, &leaf_mass)
}

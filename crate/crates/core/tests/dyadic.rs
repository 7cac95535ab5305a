use prodcoef::dyadic::{
    coefficients_from_measure, haar_value, interior_count, measure_from_coefficients, node_count, product_coefficient,
    CoefficientTree, DyadicTree, NodeId,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Leaf masses with roughly one empty leaf in five.
fn random_leaves(rng: &mut ChaCha8Rng, depth: u32) -> Vec<f64> {
    (0..1usize << depth)
        .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..10.0) })
        .collect()
}

#[test]
fn measure_round_trip_on_200_random_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..200 {
        let depth = 1 + case % 4;
        let tree = DyadicTree::from_leaves(depth, &random_leaves(&mut rng, depth)).unwrap();
        let back = measure_from_coefficients(&coefficients_from_measure(&tree).unwrap()).unwrap();
        for (i, (a, b)) in tree.masses().iter().zip(back.masses()).enumerate() {
            assert!((a - b).abs() <= 1e-12, "case {case} node {}: {a} vs {b}", i + 1);
        }
    }
}

#[test]
fn coefficient_round_trip_on_200_random_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..200 {
        let depth = 1 + case % 4;
        let a: Vec<f64> = (0..interior_count(depth)).map(|_| rng.random_range(-0.999..0.999)).collect();
        let coeffs = CoefficientTree::new(depth, rng.random_range(0.1..5.0), a).unwrap();
        let back = coefficients_from_measure(&measure_from_coefficients(&coeffs).unwrap()).unwrap();
        assert!((back.root_mass - coeffs.root_mass).abs() <= 1e-12);
        for (x, y) in coeffs.a.iter().zip(&back.a) {
            assert!((x - y).abs() <= 1e-12, "case {case}: {x} vs {y}");
        }
    }
}

/// Direct evaluation of `(mu(L) - mu(R)) / mu(S)` from the leaves below each node.
#[test]
fn coefficients_match_direct_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let counts: Vec<u64> = (0..8).map(|_| rng.random_range(0..6)).collect();
        let tree = DyadicTree::from_leaf_counts(3, &counts).unwrap();
        let coeffs = coefficients_from_measure(&tree).unwrap();
        for node in 1..=7usize {
            let level = NodeId(node).level();
            let span = 1usize << (3 - level);
            let first = node * span - 8;
            let left: u64 = counts[first..first + span / 2].iter().sum();
            let right: u64 = counts[first + span / 2..first + span].iter().sum();
            let expected = if left + right == 0 {
                0.0
            } else {
                (left as f64 - right as f64) / (left + right) as f64
            };
            assert_eq!(coeffs.a[node - 1], expected);
        }
    }
}

#[test]
fn empty_node_has_all_zero_subtree() {
    let tree = DyadicTree::from_leaf_counts(3, &[0, 0, 0, 0, 3, 1, 0, 2]).unwrap();
    let c = coefficients_from_measure(&tree).unwrap();
    assert_eq!(c.a[0], -1.0);
    // node 2 and everything under it is empty
    for node in [2usize, 4, 5] {
        assert_eq!(c.a[node - 1], 0.0);
    }
}

#[test]
fn integer_masses_are_exactly_additive() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let counts: Vec<u64> = (0..16).map(|_| rng.random_range(0..1u64 << 40)).collect();
        let tree = DyadicTree::from_leaf_counts(4, &counts).unwrap();
        for i in 1..16 {
            let m = tree.masses();
            assert_eq!(m[i - 1], m[2 * i - 1] + m[2 * i]);
        }
    }
    // off by one unit is rejected even though it is far below any relative tolerance
    let masses = vec![4e12, 2e12, 2e12 + 1.0];
    assert!(DyadicTree::from_masses(1, masses).is_err());
}

/// `h_S(leaf)` from walking the leaf's ancestor path upward.
fn haar_by_path_walk(node: usize, leaf: usize) -> i8 {
    let mut child = leaf;
    let mut parent = leaf / 2;
    while parent > node {
        child = parent;
        parent /= 2;
    }
    if parent != node {
        0
    } else if child == 2 * node {
        1
    } else {
        -1
    }
}

#[test]
fn haar_matches_path_walk_at_depth_3() {
    for node in 1..8 {
        for leaf in 8..16 {
            assert_eq!(haar_value(3, NodeId(node), NodeId(leaf)).unwrap(), haar_by_path_walk(node, leaf), "S={node} leaf={leaf}");
        }
    }
}

#[test]
fn haar_functions_are_orthogonal_within_a_level() {
    for depth in 1..=5u32 {
        let leaf_weight = 0.5f64.powi(depth as i32);
        for s in 1..=interior_count(depth) {
            for t in (s + 1)..=interior_count(depth) {
                if NodeId(s).level() != NodeId(t).level() {
                    continue;
                }
                let inner: f64 = (1 << depth..node_count(depth) + 1)
                    .map(|l| {
                        let hs = haar_value(depth, NodeId(s), NodeId(l)).unwrap();
                        let ht = haar_value(depth, NodeId(t), NodeId(l)).unwrap();
                        f64::from(hs * ht) * leaf_weight
                    })
                    .sum();
                assert_eq!(inner, 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn coefficients_are_bounded(parent in 0.0f64..1e6, share in 0.0f64..=1.0) {
        let left = parent * share;
        let a = product_coefficient(parent, left).unwrap();
        prop_assert!((-1.0..=1.0).contains(&a));
        if parent == 0.0 {
            prop_assert_eq!(a, 0.0);
        }
    }
}

proptest! {
    #[test]
    fn tree_coefficients_are_bounded(depth in 1u32..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = DyadicTree::from_leaves(depth, &random_leaves(&mut rng, depth)).unwrap();
        let c = coefficients_from_measure(&tree).unwrap();
        prop_assert!(c.a.iter().all(|a| (-1.0..=1.0).contains(a)));
        prop_assert!(c.validate().is_ok());
    }
}

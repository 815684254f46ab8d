mod common;

use common::*;
use proptest::prelude::*;
use slicegw_core::geometry::{pairwise_sq_euclidean, project_1d, sample_projections, PointCloud};

proptest! {
    #[test]
    fn costs_invariant_under_rigid_motion(seed in any::<u64>(), n in 1usize..8, d in 1usize..5) {
        let mut r = rng(seed);
        let c = gaussian_cloud(&mut r, n, d);
        let q = random_orthogonal(&mut r, d);
        let t: Vec<f64> = (0..d).map(|i| 3.0 * i as f64 - 1.5).collect();
        let moved = rigid_motion(&c, &q, &t);
        let a = pairwise_sq_euclidean(&c).unwrap();
        let b = pairwise_sq_euclidean(&moved).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn costs_permute_with_rows(values in prop::collection::vec(-5.0..5.0f64, 12), perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
        let c = PointCloud::new(values, 6, 2).unwrap();
        let p = permute_rows(&c, &perm);
        let a = pairwise_sq_euclidean(&c).unwrap();
        let b = pairwise_sq_euclidean(&p).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                prop_assert_eq!(b.get(i, j), a.get(perm[i], perm[j]));
            }
        }
    }

    #[test]
    fn projection_commutes_with_permutation(values in prop::collection::vec(-5.0..5.0f64, 15), perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle(), seed in any::<u64>()) {
        let c = PointCloud::new(values, 5, 3).unwrap();
        let dir = sample_projections(1, 3, seed).unwrap();
        let a = project_1d(&permute_rows(&c, &perm), dir.direction(0)).unwrap();
        let b = permute_rows(&project_1d(&c, dir.direction(0)).unwrap(), &perm);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cost_matrix_invariants(values in prop::collection::vec(-100.0..100.0f64, 1..30)) {
        let c = PointCloud::from_values(&values).unwrap();
        let m = pairwise_sq_euclidean(&c).unwrap();
        let n = values.len();
        for i in 0..n {
            prop_assert_eq!(m.get(i, i), 0.0);
            for j in 0..n {
                prop_assert!(m.get(i, j) >= 0.0);
                prop_assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }
}

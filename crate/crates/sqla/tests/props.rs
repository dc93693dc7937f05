//! Randomized invariant checks over the public surface.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqla::analysis::{empirical_dist, tv_distance};
use sqla::estimators::median_of_means;
use sqla::sq::{SqAccess, SqVector};

fn nonzero_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 1..40)
        .prop_filter("needs a nonzero entry", |v| v.iter().any(|&x| x != 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_indices_have_nonzero_entries(x in nonzero_vec(), seed in 0u64..1000) {
        let v = SqVector::build_dense(&x).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..32 {
            let i = v.sample(&mut rng).unwrap();
            prop_assert!(i >= 1 && i <= x.len());
            prop_assert_ne!(x[i - 1], 0.0);
            prop_assert_eq!(v.query(i).unwrap(), x[i - 1]);
        }
    }

    #[test]
    fn mass_matches_squared_norm(x in nonzero_vec()) {
        let v = SqVector::build_dense(&x).unwrap();
        let sum_sq: f64 = x.iter().map(|&t| t * t).sum();
        prop_assert!((v.mass() - sum_sq).abs() <= 1e-9 * sum_sq);
        prop_assert!((v.true_norm() - sum_sq.sqrt()).abs() <= 1e-9 * sum_sq.sqrt());
        let depth = v.tree_depth();
        prop_assert_eq!(depth, (x.len() as f64).log2().ceil() as u32);
    }

    #[test]
    fn median_of_means_within_value_range(
        values in prop::collection::vec(-50.0f64..50.0, 12..120),
        buckets in 1usize..6,
    ) {
        let size = values.len() / buckets;
        prop_assume!(size >= 1);
        let trimmed = &values[..buckets * size];
        let est = median_of_means(trimmed, buckets, size).unwrap();
        let lo = trimmed.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = trimmed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(est >= lo - 1e-12 && est <= hi + 1e-12);
    }

    #[test]
    fn tv_distance_is_a_metric_on_the_simplex(
        draws in prop::collection::vec(1usize..8, 1..200),
        other in prop::collection::vec(1usize..8, 1..200),
    ) {
        let p = empirical_dist(&draws, 8);
        let q = empirical_dist(&other, 8);
        let d = tv_distance(&p, &q);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((tv_distance(&q, &p) - d).abs() < 1e-15);
        prop_assert_eq!(tv_distance(&p, &p), 0.0);
    }
}

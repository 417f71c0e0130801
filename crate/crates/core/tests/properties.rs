//! Randomised invariants over seeded inputs.

use proptest::prelude::*;

use prodstate::hamiltonian::InteractionGraph;
use prodstate::infotools::von_neumann;
use prodstate::measurement::{icosahedral_povm, measure_channel};
use prodstate::random::{random_distribution, random_mixed};
use prodstate::rng::rng;
use prodstate::tensor::{partial_trace, trace_distance, DensityMatrix};
use prodstate::NumericPolicy;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn partial_trace_of_a_product_recovers_the_factor(seed in any::<u64>()) {
        let pol = NumericPolicy::default();
        let mut r = rng(seed);
        let a = random_mixed(&[2], 2, &mut r);
        let b = random_mixed(&[3], 2, &mut r);
        let ab = DensityMatrix::product(&[a.clone(), b.clone()], &pol).unwrap();
        prop_assert!(partial_trace(&ab, &[0]).matrix().sub(a.matrix()).max_abs() < 1e-12);
        prop_assert!(partial_trace(&ab, &[1]).matrix().sub(b.matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn trace_distance_is_a_bounded_symmetric_metric(seed in any::<u64>()) {
        let pol = NumericPolicy::default();
        let mut r = rng(seed);
        let (a, b) = (random_mixed(&[2, 2], 3, &mut r), random_mixed(&[2, 2], 1, &mut r));
        let ab = trace_distance(a.matrix(), b.matrix(), &pol).unwrap();
        let ba = trace_distance(b.matrix(), a.matrix(), &pol).unwrap();
        prop_assert!((ab - ba).abs() < 1e-10);
        prop_assert!((0.0..=2.0 + 1e-10).contains(&ab));
        prop_assert!(trace_distance(a.matrix(), a.matrix(), &pol).unwrap() < 1e-10);
    }

    #[test]
    fn chain_rule_for_entropy(seed in any::<u64>()) {
        let p = random_distribution(&[2, 3, 2], &mut rng(seed));
        let h_ab = p.marginal(&[0, 1]).unwrap().entropy();
        let h_a = p.marginal(&[0]).unwrap().entropy();
        let cond = h_ab - h_a;
        let h_abc = p.entropy();
        let i = p.conditional_mutual_information(&[1], &[2], &[0]).unwrap();
        // H(ABC) = H(A) + H(B|A) + H(C|AB) and I(B:C|A) = H(C|A) − H(C|AB).
        let h_c_given_ab = h_abc - h_ab;
        let h_c_given_a = p.marginal(&[0, 2]).unwrap().entropy() - h_a;
        prop_assert!((h_abc - (h_a + cond + h_c_given_ab)).abs() < 1e-12);
        prop_assert!((i - (h_c_given_a - h_c_given_ab)).abs() < 1e-12);
        prop_assert!(i >= -1e-12);
    }

    #[test]
    fn measurement_cannot_increase_entropy_gap(seed in any::<u64>()) {
        let pol = NumericPolicy::default();
        let rho = random_mixed(&[2], 2, &mut rng(seed));
        let q = measure_channel(&icosahedral_povm(), &rho, &[0], &pol).unwrap();
        prop_assert!((q.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // A rank-one 12-outcome measurement has Shannon entropy ≥ von Neumann entropy.
        prop_assert!(q.entropy() + 1e-12 >= von_neumann(&rho, &pol).unwrap());
    }

    #[test]
    fn threshold_rank_is_nonincreasing(seed in any::<u64>(), degree in 2usize..5) {
        let pol = NumericPolicy::default();
        let g = InteractionGraph::random_regular(8, degree, &mut rng(seed)).unwrap();
        let ranks: Vec<usize> = [-0.5, 0.0, 0.25, 0.5, 0.9].iter().map(|&l| g.threshold_rank(l, &pol).unwrap()).collect();
        prop_assert!(ranks.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(ranks[4] >= 1);
    }
}

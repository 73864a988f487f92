mod common;

use common::*;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, rng_seed: RngSeed::Fixed(SEED), ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(200))]
    #[test]
    fn euler_operator_annihilates_divergences(
        shape in (1usize..=3, 1usize..=2),
        comps in proptest::collection::vec(expr_tree(2, true, true), 3),
    ) {
        let ctx = context(shape.0, shape.1);
        prop_assert!(euler_kills_divergence(&ctx, &comps));
    }
}

proptest! {
    #![proptest_config(config(100))]
    #[test]
    fn frechet_and_adjoint_differ_by_a_divergence(
        shape in (1usize..=2, 1usize..=2),
        f in expr_tree(2, true, true),
        g in proptest::collection::vec(expr_tree(2, true, false), 2),
        h in expr_tree(2, true, false),
    ) {
        let ctx = context(shape.0, shape.1);
        prop_assert!(frechet_identity(&ctx, &f, &g, &h));
    }
}

proptest! {
    #![proptest_config(config(50))]
    #[test]
    fn slack_expansion_round_trips(
        (sys, e) in (0usize..CORPUS.len()).prop_flat_map(|which| {
            let sys = load(CORPUS[which]).system.build().unwrap();
            let order = slack_order(&sys);
            (Just(std::sync::Arc::new(sys)), expr_tree(order, true, false))
        }),
    ) {
        prop_assert!(slack_round_trip(&sys, &e));
    }
}

proptest! {
    #![proptest_config(config(500))]
    #[test]
    fn canonical_form_is_order_independent(shape in (1usize..=3, 1usize..=3), n in expr_tree(2, true, true)) {
        let ctx = context(shape.0, shape.1);
        prop_assert!(confluent(&ctx, &n));
    }
}

proptest! {
    #![proptest_config(config(100))]
    #[test]
    fn gauge_currents_are_trivial(theta in expr_tree(2, true, true)) {
        prop_assert!(gauge_is_trivial(&gkdv_specialized(), &theta));
    }
}

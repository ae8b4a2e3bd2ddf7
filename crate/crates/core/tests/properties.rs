mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #[test]
    fn bracket_satisfies_super_jacobi(
        x in derivation(4), y in derivation(4), z in derivation(4), px: bool, py: bool,
    ) {
        prop_assert!(jacobi(&x, &y, &z, px, py));
    }

    #[test]
    fn derivations_satisfy_graded_leibniz(
        x in derivation(4), f in function(4), g in function(4), px: bool, pf: bool,
    ) {
        prop_assert!(leibniz(&x, &f, &g, px, pf));
    }

    #[test]
    fn change_of_chart_is_an_involution(
        (s, x) in spec(4).prop_flat_map(|s| (Just(s.clone()), derivation(s.rank()))),
    ) {
        prop_assert!(transform_involution(&x, &s));
    }

    #[test]
    fn change_of_chart_preserves_brackets(
        (s, x, y) in spec(4).prop_flat_map(|s| (Just(s.clone()), derivation(s.rank()), derivation(s.rank()))),
    ) {
        prop_assert!(transform_lie_map(&x, &y, &s));
    }

    #[test]
    fn split_cochain_reconstructs(
        (s, c) in spec(4).prop_flat_map(|s| (Just(s.clone()), derivation(s.rank()))),
    ) {
        prop_assert!(split_reconstructs(&c, &s));
    }

    #[test]
    fn exp_and_log_are_inverse(y in derivation(5), f in function(5), g in function(5)) {
        prop_assert!(exp_log_round_trip(&y, &f, &g, 5));
    }

    #[test]
    fn conjugation_is_linear(
        y in derivation(5), x1 in derivation(5), x2 in derivation(5), a in -3i64..=3, b in -3i64..=3,
    ) {
        prop_assert!(conjugate_linear(&y, &x1, &x2, a, b, 5));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn bound_agrees_with_globality(s in spec(4)) {
        prop_assert!(bound_matches_globality(&s));
    }

    #[test]
    fn more_fields_give_a_smaller_kernel(
        s in spec(3),
        a in prop::collection::vec(0usize..1000, 0..6),
        b in prop::collection::vec(0usize..1000, 1..4),
        q in -1i64..=2,
    ) {
        prop_assert!(kernel_monotone(&s, &a, &b, q));
    }
}

#[test]
fn polynomial_derivations_are_regular_on_u0() {
    let r = run_property(32, polynomial_derivation(3), |x| x.all_polynomial());
    assert!(r.is_ok(), "{r:?}");
}

#[test]
fn the_runner_reports_violations() {
    assert!(run_property(4, derivation(2), |_| false).is_err());
}

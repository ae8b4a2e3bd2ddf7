#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use supnil::chart_geometry::{
    degree_range, global_basis, is_global, model_transform, monomial_bound, slot_bound, slots_of_degree, split_cochain,
    transform, transform_derivation, BundleSpec, ChartExpr, Generator, ParityFilter,
};
use supnil::kernel_analysis::{
    build_template, common_kernel_truncated, derive_constraints, solve_constraints, SlotStatus, Space,
};
use supnil::superalgebra::{
    exp_aut, log_aut, rat, Direction, LaurentPoly, OddMonomial, SuperDerivation, SuperFunction,
};

pub fn poly() -> impl Strategy<Value = LaurentPoly> {
    prop::collection::vec((-3i64..=3, -3i64..=3), 0..3)
        .prop_map(|ts| LaurentPoly::from_terms(ts.into_iter().map(|(e, c)| (e, rat(c)))))
}

pub fn polynomial() -> impl Strategy<Value = LaurentPoly> {
    prop::collection::vec((0i64..=4, -3i64..=3), 0..3)
        .prop_map(|ts| LaurentPoly::from_terms(ts.into_iter().map(|(e, c)| (e, rat(c)))))
}

fn build_derivation(n: usize, terms: Vec<(u32, usize, LaurentPoly)>) -> SuperDerivation {
    let mut d = SuperDerivation::zero();
    for (mask, dir, p) in terms {
        let dir = if dir == n { Direction::Base } else { Direction::Odd(dir) };
        d.add_term(OddMonomial::from_mask(mask), dir, &p);
    }
    d
}

/// A derivation in `n` generators with Laurent coefficients.
pub fn derivation(n: usize) -> impl Strategy<Value = SuperDerivation> {
    prop::collection::vec((0u32..(1 << n), 0..=n, poly()), 0..5).prop_map(move |ts| build_derivation(n, ts))
}

pub fn polynomial_derivation(n: usize) -> impl Strategy<Value = SuperDerivation> {
    prop::collection::vec((0u32..(1 << n), 0..=n, polynomial()), 0..5).prop_map(move |ts| build_derivation(n, ts))
}

pub fn function(n: usize) -> impl Strategy<Value = SuperFunction> {
    prop::collection::vec((0u32..(1 << n), poly()), 0..4).prop_map(|ts| {
        let mut f = SuperFunction::zero();
        for (mask, p) in ts {
            f.add_term(OddMonomial::from_mask(mask), &p);
        }
        f
    })
}

pub fn spec(max_rank: usize) -> impl Strategy<Value = BundleSpec> {
    prop::collection::vec(-3i64..=4, 1..=max_rank).prop_map(|ts| {
        let gens = ts
            .into_iter()
            .enumerate()
            .map(|(i, twist)| Generator {
                name: format!("x{}", i + 1),
                twist,
            })
            .collect();
        BundleSpec::new(gens).unwrap()
    })
}

/// The homogeneous part of the given parity (`true` = odd).
pub fn part(x: &SuperDerivation, odd: bool) -> SuperDerivation {
    let (even, oddp) = x.split_parity();
    if odd {
        oddp
    } else {
        even
    }
}

fn fpart(f: &SuperFunction, odd: bool) -> SuperFunction {
    let (even, oddp) = f.split_parity();
    if odd {
        oddp
    } else {
        even
    }
}

fn sign(odd: bool) -> i64 {
    if odd {
        -1
    } else {
        1
    }
}

pub fn jacobi(x: &SuperDerivation, y: &SuperDerivation, z: &SuperDerivation, px: bool, py: bool) -> bool {
    let x = part(x, px);
    let y = part(y, py);
    let lhs = x.bracket(&y.bracket(z));
    let rhs = &x.bracket(&y).bracket(z) + &y.bracket(&x.bracket(z)).scale(&rat(sign(px && py)));
    lhs == rhs
}

pub fn leibniz(x: &SuperDerivation, f: &SuperFunction, g: &SuperFunction, px: bool, pf: bool) -> bool {
    let x = part(x, px);
    let f = fpart(f, pf);
    let lhs = x.apply(&(&f * g));
    let rhs = &(&x.apply(&f) * g) + &(&f * &x.apply(g)).scale(&rat(sign(px && pf)));
    lhs == rhs
}

pub fn transform_involution(x: &SuperDerivation, s: &BundleSpec) -> bool {
    let e = ChartExpr::on_u0(x.clone());
    transform(&transform(&e, s), s) == e
}

pub fn transform_lie_map(x: &SuperDerivation, y: &SuperDerivation, s: &BundleSpec) -> bool {
    transform_derivation(&x.bracket(y), s) == transform_derivation(x, s).bracket(&transform_derivation(y, s))
}

/// `monomial_bound` agrees with a direct globality test of `z^e` times every
/// slot, for exponents around the bound.
pub fn bound_matches_globality(s: &BundleSpec) -> bool {
    for d in degree_range(s.rank()) {
        for slot in slots_of_degree(s.rank(), d) {
            let m = slot_bound(&slot, s);
            if monomial_bound(slot.mono, slot.dir, s) != Ok(m) {
                return false;
            }
            for e in -2..=m.max(0) + 2 {
                if is_global(&slot.z_power(e), s) != (0..=m).contains(&e) {
                    return false;
                }
            }
        }
    }
    true
}

/// `c = u0 - u1 + obstruction` with every part regular on its own chart and
/// the obstruction in the H^1 window of each slot.
pub fn split_reconstructs(c: &SuperDerivation, s: &BundleSpec) -> bool {
    let sc = split_cochain(c, s);
    let back = &(&sc.u0 - &sc.u1_pullback) + &sc.obstruction;
    let window = sc.obstruction.terms().all(|(mono, dir, p)| {
        let m = monomial_bound(mono, dir, s).unwrap();
        p.terms().all(|(e, _)| m < e && e < 0)
    });
    back == *c
        && sc.u0.all_polynomial()
        && sc.u1.expr.all_polynomial()
        && model_transform(&sc.u1.expr, s) == sc.u1_pullback
        && window
}

/// The part of `y` of filtration degree at least 2 and even parity.
pub fn unipotent_log(y: &SuperDerivation, n: usize) -> SuperDerivation {
    let mut out = SuperDerivation::zero();
    for d in (2..=n as i64).step_by(2) {
        out += &y.degree_part(d);
    }
    out
}

pub fn exp_log_round_trip(y: &SuperDerivation, f: &SuperFunction, g: &SuperFunction, n: usize) -> bool {
    let y = unipotent_log(y, n);
    let a = exp_aut(&y).unwrap();
    log_aut(&a) == y && a.inverse().apply(&a.apply(f)) == *f && a.apply(&(f * g)) == &a.apply(f) * &a.apply(g)
}

pub fn conjugate_linear(
    y: &SuperDerivation,
    x1: &SuperDerivation,
    x2: &SuperDerivation,
    a: i64,
    b: i64,
    n: usize,
) -> bool {
    let alpha = exp_aut(&unipotent_log(y, n)).unwrap();
    let combo = &x1.scale(&rat(a)) + &x2.scale(&rat(b));
    alpha.conjugate(&combo) == &alpha.conjugate(x1).scale(&rat(a)) + &alpha.conjugate(x2).scale(&rat(b))
}

/// Adding fields can only shrink the common kernel, for both the solver and
/// the truncation oracle.
pub fn kernel_monotone(s: &BundleSpec, picks: &[usize], extra: &[usize], q: i64) -> bool {
    let mut basis = Vec::new();
    for d in 0..=2 {
        basis.extend(global_basis(s, d, ParityFilter::All));
    }
    if basis.is_empty() {
        return true;
    }
    let pick = |ix: &[usize]| ix.iter().map(|i| basis[i % basis.len()].clone()).collect::<Vec<_>>();
    let small = pick(picks);
    let mut large = small.clone();
    large.extend(pick(extra));
    let t = build_template(s, Space::Graded(q), ParityFilter::All);
    let a = common_kernel_truncated(&small, &t, 3);
    let b = common_kernel_truncated(&large, &t, 3);
    if b.dimension > a.dimension {
        return false;
    }
    let sa = solve_constraints(&derive_constraints(&small, &t));
    let sb = solve_constraints(&derive_constraints(&large, &t));
    sa.statuses
        .iter()
        .zip(&sb.statuses)
        .all(|(x, y)| *x != SlotStatus::Zero || *y == SlotStatus::Zero)
}

/// Runs `check` on `cases` inputs drawn from `strategy`, with a fixed seed.
pub fn run_property<S: Strategy>(cases: u32, strategy: S, check: impl Fn(S::Value) -> bool) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(
        config,
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    runner
        .run(&strategy, |v| {
            if check(v) {
                Ok(())
            } else {
                Err(TestCaseError::fail("property violated"))
            }
        })
        .map_err(|e| e.to_string())
}

/// Every property suite with its case count.
pub fn property_suites() -> Vec<(&'static str, Result<(), String>)> {
    vec![
        (
            "jacobi",
            run_property(
                64,
                (
                    derivation(4),
                    derivation(4),
                    derivation(4),
                    any::<bool>(),
                    any::<bool>(),
                ),
                |(x, y, z, a, b)| jacobi(&x, &y, &z, a, b),
            ),
        ),
        (
            "leibniz",
            run_property(
                64,
                (derivation(4), function(4), function(4), any::<bool>(), any::<bool>()),
                |(x, f, g, a, b)| leibniz(&x, &f, &g, a, b),
            ),
        ),
        (
            "transform involution",
            run_property(
                64,
                spec(4).prop_flat_map(|s| (Just(s.clone()), derivation(s.rank()))),
                |(s, x)| transform_involution(&x, &s),
            ),
        ),
        (
            "transform lie map",
            run_property(
                64,
                spec(4).prop_flat_map(|s| (Just(s.clone()), derivation(s.rank()), derivation(s.rank()))),
                |(s, x, y)| transform_lie_map(&x, &y, &s),
            ),
        ),
        (
            "bound vs globality",
            run_property(3, spec(4), |s| bound_matches_globality(&s)),
        ),
        (
            "split reconstruction",
            run_property(
                100,
                spec(4).prop_flat_map(|s| (Just(s.clone()), derivation(s.rank()))),
                |(s, c)| split_reconstructs(&c, &s),
            ),
        ),
        (
            "exp/log round trip",
            run_property(64, (derivation(5), function(5), function(5)), |(y, f, g)| {
                exp_log_round_trip(&y, &f, &g, 5)
            }),
        ),
        (
            "conjugate linearity",
            run_property(
                64,
                (derivation(5), derivation(5), derivation(5), -3i64..=3, -3i64..=3),
                |(y, x1, x2, a, b)| conjugate_linear(&y, &x1, &x2, a, b, 5),
            ),
        ),
        (
            "kernel monotonicity",
            run_property(
                24,
                (
                    spec(3),
                    prop::collection::vec(0usize..1000, 0..6),
                    prop::collection::vec(0usize..1000, 1..4),
                    -1i64..=2,
                ),
                |(s, a, b, q)| kernel_monotone(&s, &a, &b, q),
            ),
        ),
    ]
}

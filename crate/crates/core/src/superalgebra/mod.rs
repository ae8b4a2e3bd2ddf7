//! Exact superfunction and superderivation arithmetic on a single chart.
//!
//! Odd generators are indexed `0..n` and multiplied in increasing index
//! order; every sign is normalised to that order. Derivations are kept in
//! coefficient-left form `sum f_x d/dx`.

pub mod automorphism;
pub mod derivation;
pub mod expr;
pub mod function;
pub mod laurent;
pub mod odd;

use std::collections::BTreeMap;

use thiserror::Error;

pub use automorphism::{exp_aut, log_aut, SuperAutomorphism};
pub use derivation::{term_degree, Direction, SuperDerivation};
pub use function::SuperFunction;
pub use laurent::{rat, ratio, LaurentPoly, Rational};
pub use odd::OddMonomial;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("the zero derivation has no leading part")]
    NoLeadingPart,
    #[error("an automorphism logarithm must be even")]
    OddLog,
    #[error("an automorphism logarithm must have filtration degree >= 2, found a term of degree {0}")]
    LowDegreeLog(i64),
    #[error("operator is not unipotent on the coordinates")]
    NotUnipotent,
    #[error("parse error at byte {pos}: {message}")]
    Parse { pos: usize, message: String },
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
}

pub fn mul(f: &SuperFunction, g: &SuperFunction) -> SuperFunction {
    f * g
}

pub fn apply(x: &SuperDerivation, f: &SuperFunction) -> SuperFunction {
    x.apply(f)
}

pub fn bracket(x: &SuperDerivation, y: &SuperDerivation) -> SuperDerivation {
    x.bracket(y)
}

pub fn grade_decompose(x: &SuperDerivation) -> BTreeMap<i64, SuperDerivation> {
    x.grade_decompose()
}

pub fn leading_part(x: &SuperDerivation) -> Result<(i64, SuperDerivation), AlgebraError> {
    x.leading_part()
}

pub fn conjugate(alpha: &SuperAutomorphism, x: &SuperDerivation) -> SuperDerivation {
    alpha.conjugate(x)
}

#[cfg(test)]
mod tests {
    use super::expr::parse_derivation;
    use super::*;

    fn names() -> Vec<String> {
        ["theta1", "theta2", "theta3", "eta1", "eta2", "eta3", "eta4"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn d(text: &str) -> SuperDerivation {
        parse_derivation(text, &names(), "z").unwrap()
    }

    fn f(text: &str) -> SuperFunction {
        expr::parse_function(text, &names(), "z").unwrap()
    }

    #[test]
    fn apply_examples() {
        assert_eq!(
            apply(&d("theta1*theta2*theta3*d(eta1)"), &f("eta1*eta2")),
            f("theta1*theta2*theta3*eta2")
        );
        assert_eq!(apply(&d("z^4*theta1*eta1*d(z)"), &f("z^3")), f("3*z^6*theta1*eta1"));
        let y01 = d("(z^-2*eta1 + z^-8*eta2)*eta3*eta4*d(theta1)");
        assert_eq!(apply(&y01, &f("theta1")), f("(z^-2*eta1 + z^-8*eta2)*eta3*eta4"));
    }

    #[test]
    fn bracket_reproduces_the_deformation_correction() {
        let y01 = d("(z^-2*eta1 + z^-8*eta2)*eta3*eta4*d(theta1)");
        // P_1 = 3 + z^2 stands in for a generic coefficient
        let x = d("(3 + z^2)*theta1*eta1*d(z)");
        let expected =
            d("-(3 + z^2)*z^-8*eta1*eta2*eta3*eta4*d(z) + 8*(3 + z^2)*z^-9*theta1*eta1*eta2*eta3*eta4*d(theta1)");
        assert_eq!(bracket(&y01, &x), expected);
    }

    #[test]
    fn bracket_of_commuting_pair_vanishes() {
        let a = d("theta1*theta2*theta3*d(eta1)");
        let b = d("z^4*theta1*eta1*d(z)");
        assert!(bracket(&a, &b).is_zero());
        assert!(bracket(&b, &b).is_zero());
    }

    #[test]
    fn grading_and_leading_parts() {
        let x = d("z^2*theta1*eta2*eta3*d(eta3) + theta1*eta1*eta2*eta3*eta4*d(theta1)");
        let parts = grade_decompose(&x);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[&2], d("z^2*theta1*eta2*eta3*d(eta3)"));
        assert_eq!(parts[&4], d("theta1*eta1*eta2*eta3*eta4*d(theta1)"));
        assert!(grade_decompose(&SuperDerivation::zero()).is_empty());
        assert_eq!(leading_part(&x).unwrap(), (2, d("z^2*theta1*eta2*eta3*d(eta3)")));
        let single = d("theta1*theta2*theta3*d(eta1)");
        assert_eq!(grade_decompose(&single)[&2], single);

        let cancelled = &(&x - &d("z^2*theta1*eta2*eta3*d(eta3)")) + &SuperDerivation::zero();
        assert_eq!(leading_part(&cancelled).unwrap().0, 4);
        assert_eq!(leading_part(&SuperDerivation::zero()), Err(AlgebraError::NoLeadingPart));
    }

    #[test]
    fn exp_of_deformation_truncates_after_one_term() {
        let y01 = d("(z^-2*eta1 + z^-8*eta2)*eta3*eta4*d(theta1)");
        assert!(bracket(&y01, &y01).is_zero());
        let alpha = exp_aut(&y01).unwrap();
        // exp(Y)(f) = f + Y(f) since Y(Y(f)) = 0
        for g in ["theta1", "theta1*theta2", "z^3*theta1*eta2", "eta1"] {
            let g = f(g);
            assert_eq!(alpha.apply(&g), &g + &y01.apply(&g));
            assert!(y01.apply(&y01.apply(&g)).is_zero());
        }
        assert_eq!(
            exp_aut(&SuperDerivation::zero()).unwrap().apply(&f("theta2")),
            f("theta2")
        );
    }

    #[test]
    fn conjugation_matches_displayed_formula_for_eta2() {
        let y01 = d("(z^-2*eta1 + z^-8*eta2)*eta3*eta4*d(theta1)");
        let alpha = exp_aut(&y01).unwrap();
        let x = d("(1 + z + z^4)*theta1*eta2*d(z)");
        let expected = d(
            "(1 + z + z^4)*theta1*eta2*d(z) + (1 + z + z^4)*z^-2*eta1*eta2*eta3*eta4*d(z) \
             - 2*(1 + z + z^4)*z^-3*theta1*eta1*eta2*eta3*eta4*d(theta1)",
        );
        assert_eq!(conjugate(&alpha, &x), expected);
        assert_eq!(conjugate(&SuperAutomorphism::identity(), &x), x);
    }
}

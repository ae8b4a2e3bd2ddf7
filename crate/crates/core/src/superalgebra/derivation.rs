use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use num_traits::Zero;

use super::function::SuperFunction;
use super::laurent::{LaurentPoly, Rational};
use super::odd::OddMonomial;
use super::AlgebraError;

/// Coordinate direction of a derivation term: along the even base
/// coordinate, or along one odd generator.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Direction {
    Base,
    Odd(usize),
}

impl Direction {
    pub fn is_odd(self) -> bool {
        matches!(self, Direction::Odd(_))
    }

    /// The coordinate function this direction differentiates.
    pub fn coordinate(self) -> SuperFunction {
        match self {
            Direction::Base => SuperFunction::base(),
            Direction::Odd(i) => SuperFunction::generator(i),
        }
    }

    /// Z-degree shift contributed by the direction itself.
    pub fn degree_shift(self) -> i64 {
        match self {
            Direction::Base => 0,
            Direction::Odd(_) => -1,
        }
    }
}

/// Z-degree of the monomial derivation `xi^I d(dir)`.
pub fn term_degree(mono: OddMonomial, dir: Direction) -> i64 {
    mono.degree() as i64 + dir.degree_shift()
}

/// Superderivation on one chart in coefficient-left normal form
/// `sum_x D(x) d/dx`, stored by its values on the coordinates.
#[derive(Clone, PartialEq, Eq, Hash, Default, Debug)]
pub struct SuperDerivation {
    comps: BTreeMap<Direction, SuperFunction>,
}

impl SuperDerivation {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `coeff * mono * d(dir)`.
    pub fn term(mono: OddMonomial, coeff: LaurentPoly, dir: Direction) -> Self {
        let mut d = Self::zero();
        d.add_term(mono, dir, &coeff);
        d
    }

    /// `f * d(dir)`.
    pub fn along(f: SuperFunction, dir: Direction) -> Self {
        let mut d = Self::zero();
        if !f.is_zero() {
            d.comps.insert(dir, f);
        }
        d
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    /// The value of the derivation on the coordinate of `dir`.
    pub fn component(&self, dir: Direction) -> Option<&SuperFunction> {
        self.comps.get(&dir)
    }

    pub fn components(&self) -> impl Iterator<Item = (Direction, &SuperFunction)> + '_ {
        self.comps.iter().map(|(d, f)| (*d, f))
    }

    pub fn directions(&self) -> impl Iterator<Item = Direction> + '_ {
        self.comps.keys().copied()
    }

    /// All `(monomial, direction, coefficient)` terms, grouped by direction.
    pub fn terms(&self) -> impl Iterator<Item = (OddMonomial, Direction, &LaurentPoly)> + '_ {
        self.comps
            .iter()
            .flat_map(|(d, f)| f.terms().map(move |(m, p)| (m, *d, p)))
    }

    pub fn num_terms(&self) -> usize {
        self.comps.values().map(SuperFunction::num_terms).sum()
    }

    pub fn coeff(&self, mono: OddMonomial, dir: Direction) -> LaurentPoly {
        self.comps
            .get(&dir)
            .and_then(|f| f.coeff(mono))
            .cloned()
            .unwrap_or_default()
    }

    pub fn add_term(&mut self, mono: OddMonomial, dir: Direction, coeff: &LaurentPoly) {
        if coeff.is_zero() {
            return;
        }
        let f = self.comps.entry(dir).or_default();
        f.add_term(mono, coeff);
        if f.is_zero() {
            self.comps.remove(&dir);
        }
    }

    pub fn add_along(&mut self, f: &SuperFunction, dir: Direction) {
        if f.is_zero() {
            return;
        }
        let c = self.comps.entry(dir).or_default();
        *c += f;
        if c.is_zero() {
            self.comps.remove(&dir);
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            comps: self.comps.iter().map(|(d, f)| (*d, f.scale(c))).collect(),
        }
    }

    /// Left multiplication by a function: `f * D`.
    pub fn left_mul(&self, f: &SuperFunction) -> Self {
        let mut out = Self::zero();
        for (d, g) in &self.comps {
            out.add_along(&(f * g), *d);
        }
        out
    }

    /// Map every coefficient polynomial through `op`, keeping the monomial
    /// and direction of each term.
    pub fn map_coeffs(&self, mut op: impl FnMut(OddMonomial, Direction, &LaurentPoly) -> LaurentPoly) -> Self {
        let mut out = Self::zero();
        for (m, d, p) in self.terms() {
            out.add_term(m, d, &op(m, d, p));
        }
        out
    }

    /// Graded Leibniz action on a function.
    pub fn apply(&self, f: &SuperFunction) -> SuperFunction {
        let mut out = SuperFunction::zero();
        for (d, coeff) in &self.comps {
            let df = match d {
                Direction::Base => f.d_base(),
                Direction::Odd(i) => f.d_odd(*i),
            };
            if !df.is_zero() {
                out += &(coeff * &df);
            }
        }
        out
    }

    /// Split into (even, odd) parity parts.
    pub fn split_parity(&self) -> (Self, Self) {
        let mut even = Self::zero();
        let mut odd = Self::zero();
        for (m, d, p) in self.terms() {
            if term_degree(m, d).rem_euclid(2) == 0 {
                even.add_term(m, d, p);
            } else {
                odd.add_term(m, d, p);
            }
        }
        (even, odd)
    }

    /// True when every term has even Z-degree (the zero derivation is even).
    pub fn is_even(&self) -> bool {
        self.terms().all(|(m, d, _)| term_degree(m, d).rem_euclid(2) == 0)
    }

    pub fn is_odd(&self) -> bool {
        self.terms().all(|(m, d, _)| term_degree(m, d).rem_euclid(2) == 1)
    }

    /// Lowest Z-degree with a nonzero component; `None` for the zero derivation.
    pub fn min_degree(&self) -> Option<i64> {
        self.terms().map(|(m, d, _)| term_degree(m, d)).min()
    }

    pub fn max_degree(&self) -> Option<i64> {
        self.terms().map(|(m, d, _)| term_degree(m, d)).max()
    }

    pub fn degree_part(&self, degree: i64) -> Self {
        let mut out = Self::zero();
        for (m, d, p) in self.terms() {
            if term_degree(m, d) == degree {
                out.add_term(m, d, p);
            }
        }
        out
    }

    /// Homogeneous components keyed by Z-degree. Their sum is `self`.
    pub fn grade_decompose(&self) -> BTreeMap<i64, SuperDerivation> {
        let mut parts: BTreeMap<i64, SuperDerivation> = BTreeMap::new();
        for (m, d, p) in self.terms() {
            parts.entry(term_degree(m, d)).or_default().add_term(m, d, p);
        }
        parts
    }

    /// Lowest-degree component and its degree.
    pub fn leading_part(&self) -> Result<(i64, SuperDerivation), AlgebraError> {
        let k = self.min_degree().ok_or(AlgebraError::NoLeadingPart)?;
        Ok((k, self.degree_part(k)))
    }

    /// True if no coefficient carries a negative power of the base coordinate.
    pub fn all_polynomial(&self) -> bool {
        self.comps.values().all(SuperFunction::all_polynomial)
    }

    /// Super-commutator `[self, other]`.
    pub fn bracket(&self, other: &SuperDerivation) -> SuperDerivation {
        let (xe, xo) = self.split_parity();
        let (ye, yo) = other.split_parity();
        let mut out = homogeneous_bracket(&xe, &ye, false);
        out += &homogeneous_bracket(&xe, &yo, false);
        out += &homogeneous_bracket(&xo, &ye, false);
        out += &homogeneous_bracket(&xo, &yo, true);
        out
    }

    /// Composition `self . other` as an operator applied to `f`.
    pub fn compose_apply(&self, other: &SuperDerivation, f: &SuperFunction) -> SuperFunction {
        self.apply(&other.apply(f))
    }
}

/// `[X, Y]` for parity-homogeneous X, Y; `both_odd` selects the
/// anticommutator sign.
fn homogeneous_bracket(x: &SuperDerivation, y: &SuperDerivation, both_odd: bool) -> SuperDerivation {
    if x.is_zero() || y.is_zero() {
        return SuperDerivation::zero();
    }
    let dirs: BTreeSet<Direction> = x.directions().chain(y.directions()).collect();
    let mut out = SuperDerivation::zero();
    for d in dirs {
        let mut val = SuperFunction::zero();
        if let Some(yd) = y.component(d) {
            val += &x.apply(yd);
        }
        if let Some(xd) = x.component(d) {
            let yx = y.apply(xd);
            if both_odd {
                val += &yx;
            } else {
                val -= &yx;
            }
        }
        out.add_along(&val, d);
    }
    out
}

impl AddAssign<&SuperDerivation> for SuperDerivation {
    fn add_assign(&mut self, rhs: &SuperDerivation) {
        for (d, f) in &rhs.comps {
            self.add_along(f, *d);
        }
    }
}

impl SubAssign<&SuperDerivation> for SuperDerivation {
    fn sub_assign(&mut self, rhs: &SuperDerivation) {
        for (d, f) in &rhs.comps {
            self.add_along(&-f, *d);
        }
    }
}

impl Add for &SuperDerivation {
    type Output = SuperDerivation;
    fn add(self, rhs: &SuperDerivation) -> SuperDerivation {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &SuperDerivation {
    type Output = SuperDerivation;
    fn sub(self, rhs: &SuperDerivation) -> SuperDerivation {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for &SuperDerivation {
    type Output = SuperDerivation;
    fn neg(self) -> SuperDerivation {
        SuperDerivation {
            comps: self.comps.iter().map(|(d, f)| (*d, -f)).collect(),
        }
    }
}

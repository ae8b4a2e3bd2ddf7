use std::collections::BTreeMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_traits::Zero;

use super::laurent::{LaurentPoly, Rational};
use super::odd::OddMonomial;

/// Local superfunction on one chart: a finite sum of Laurent coefficients
/// times odd monomials. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash, Default, Debug)]
pub struct SuperFunction {
    terms: BTreeMap<OddMonomial, LaurentPoly>,
}

impl SuperFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::term(OddMonomial::ONE, LaurentPoly::one())
    }

    pub fn term(mono: OddMonomial, coeff: LaurentPoly) -> Self {
        let mut f = Self::zero();
        f.add_term(mono, &coeff);
        f
    }

    pub fn generator(i: usize) -> Self {
        Self::term(OddMonomial::generator(i), LaurentPoly::one())
    }

    /// The even base coordinate `z`.
    pub fn base() -> Self {
        Self::term(OddMonomial::ONE, LaurentPoly::z_pow(1))
    }

    pub fn from_poly(p: LaurentPoly) -> Self {
        Self::term(OddMonomial::ONE, p)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (OddMonomial, &LaurentPoly)> + '_ {
        self.terms.iter().map(|(m, p)| (*m, p))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, mono: OddMonomial) -> Option<&LaurentPoly> {
        self.terms.get(&mono)
    }

    pub fn add_term(&mut self, mono: OddMonomial, coeff: &LaurentPoly) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(mono).or_default();
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&mono);
        }
    }

    pub fn sub_term(&mut self, mono: OddMonomial, coeff: &LaurentPoly) {
        self.add_term(mono, &-coeff);
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(m, p)| (*m, p.scale(c))).collect(),
        }
    }

    pub fn mul_poly(&self, p: &LaurentPoly) -> Self {
        let mut out = Self::zero();
        for (m, q) in &self.terms {
            out.add_term(*m, &(q * p));
        }
        out
    }

    /// Z-degree homogeneous part.
    pub fn degree_part(&self, degree: usize) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() == degree)
                .map(|(m, p)| (*m, p.clone()))
                .collect(),
        }
    }

    /// Lowest Z-degree present, `None` for zero.
    pub fn min_degree(&self) -> Option<usize> {
        self.terms.keys().map(|m| m.degree()).min()
    }

    /// Parity of a homogeneous function, `None` for zero or mixed parity.
    pub fn parity(&self) -> Option<bool> {
        let mut it = self.terms.keys().map(|m| m.degree() % 2 == 1);
        let first = it.next()?;
        it.all(|p| p == first).then_some(first)
    }

    /// Split into (even, odd) parts.
    pub fn split_parity(&self) -> (Self, Self) {
        let mut even = Self::zero();
        let mut odd = Self::zero();
        for (m, p) in &self.terms {
            if m.is_even() {
                even.terms.insert(*m, p.clone());
            } else {
                odd.terms.insert(*m, p.clone());
            }
        }
        (even, odd)
    }

    /// Derivative along the base coordinate.
    pub fn d_base(&self) -> Self {
        let mut out = Self::zero();
        for (m, p) in &self.terms {
            out.add_term(*m, &p.derivative());
        }
        out
    }

    /// Left derivative along odd generator `i`.
    pub fn d_odd(&self, i: usize) -> Self {
        let mut out = Self::zero();
        for (m, p) in &self.terms {
            if let Some((rest, flip)) = m.left_derivative(i) {
                if flip {
                    out.sub_term(rest, p);
                } else {
                    out.add_term(rest, p);
                }
            }
        }
        out
    }

    /// Union of all generator indices present in some term.
    pub fn support_mask(&self) -> u32 {
        self.terms.keys().fold(0, |acc, m| acc | m.mask())
    }

    pub fn all_polynomial(&self) -> bool {
        self.terms.values().all(LaurentPoly::is_polynomial)
    }
}

impl AddAssign<&SuperFunction> for SuperFunction {
    fn add_assign(&mut self, rhs: &SuperFunction) {
        for (m, p) in &rhs.terms {
            self.add_term(*m, p);
        }
    }
}

impl SubAssign<&SuperFunction> for SuperFunction {
    fn sub_assign(&mut self, rhs: &SuperFunction) {
        for (m, p) in &rhs.terms {
            self.sub_term(*m, p);
        }
    }
}

impl Add for &SuperFunction {
    type Output = SuperFunction;
    fn add(self, rhs: &SuperFunction) -> SuperFunction {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &SuperFunction {
    type Output = SuperFunction;
    fn sub(self, rhs: &SuperFunction) -> SuperFunction {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for &SuperFunction {
    type Output = SuperFunction;
    fn neg(self) -> SuperFunction {
        SuperFunction {
            terms: self.terms.iter().map(|(m, p)| (*m, -p)).collect(),
        }
    }
}

/// Exterior-algebra product with Laurent coefficients.
impl Mul for &SuperFunction {
    type Output = SuperFunction;
    fn mul(self, rhs: &SuperFunction) -> SuperFunction {
        let mut out = SuperFunction::zero();
        for (m1, p1) in &self.terms {
            for (m2, p2) in &rhs.terms {
                if let Some((m, flip)) = m1.mul(*m2) {
                    let c = p1 * p2;
                    if flip {
                        out.sub_term(m, &c);
                    } else {
                        out.add_term(m, &c);
                    }
                }
            }
        }
        out
    }
}

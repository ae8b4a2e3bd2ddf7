use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Exact coefficient field.
///
/// Every constant that shows up in the P^1 computations is rational. A
/// `Q(i)` coefficient type would slot in here if complex constants are
/// ever needed.
pub type Rational = num_rational::BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Sparse Laurent polynomial in the base coordinate with rational
/// coefficients. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct LaurentPoly {
    coeffs: BTreeMap<i64, Rational>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(0, c)
    }

    pub fn monomial(exp: i64, c: Rational) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(exp, c);
        }
        Self { coeffs }
    }

    /// `z^exp` with coefficient one.
    pub fn z_pow(exp: i64) -> Self {
        Self::monomial(exp, Rational::one())
    }

    pub fn from_terms<I: IntoIterator<Item = (i64, Rational)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.keys().all(|&e| e == 0)
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, exp: i64) -> Rational {
        self.coeffs.get(&exp).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (i64, &Rational)> + '_ {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn leading_coeff(&self) -> Option<&Rational> {
        self.coeffs.values().next_back()
    }

    /// True when no negative exponent occurs.
    pub fn is_polynomial(&self) -> bool {
        self.min_exp().is_none_or(|e| e >= 0)
    }

    pub fn add_term(&mut self, exp: i64, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.coeffs.entry(exp) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            coeffs: self.coeffs.iter().map(|(e, v)| (*e, v * c)).collect(),
        }
    }

    /// Multiply by `z^k`.
    pub fn shift(&self, k: i64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(e, v)| (e + k, v.clone())).collect(),
        }
    }

    pub fn derivative(&self) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.coeffs {
            if *e != 0 {
                out.add_term(e - 1, c * rat(*e));
            }
        }
        out
    }

    /// Substitute `z -> 1/w` and multiply by `w^k`: the exponent map `e -> k - e`.
    pub fn invert_exponents(&self, k: i64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(e, v)| (k - e, v.clone())).collect(),
        }
    }

    /// Keep only the terms whose exponent satisfies `keep`.
    pub fn filter_exps(&self, mut keep: impl FnMut(i64) -> bool) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(e, _)| keep(**e))
                .map(|(e, v)| (*e, v.clone()))
                .collect(),
        }
    }

    /// Euclidean division for polynomials (no negative exponents). Panics on
    /// a zero divisor.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        debug_assert!(self.is_polynomial() && divisor.is_polynomial());
        let d_deg = divisor.max_exp().unwrap();
        let d_lead = divisor.leading_coeff().unwrap().clone();
        let mut rem = self.clone();
        let mut quot = Self::zero();
        while let Some(r_deg) = rem.max_exp() {
            if r_deg < d_deg {
                break;
            }
            let c = rem.leading_coeff().unwrap() / &d_lead;
            let shift = r_deg - d_deg;
            quot.add_term(shift, c.clone());
            rem -= &divisor.shift(shift).scale(&c);
        }
        (quot, rem)
    }

    /// Monic gcd of two polynomials; `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn monic(&self) -> Self {
        match self.leading_coeff() {
            None => Self::zero(),
            Some(l) => self.scale(&(Rational::one() / l)),
        }
    }

    /// Strip the largest power of `z` dividing every term, so the result has
    /// a nonzero constant term. Returns the stripped exponent too.
    pub fn strip_z_power(&self) -> (Self, i64) {
        match self.min_exp() {
            None => (Self::zero(), 0),
            Some(m) => (self.shift(-m), m),
        }
    }

    pub fn eval_display(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (e, c)) in self.coeffs.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            s.push_str(&monomial_display(&abs, *e, var));
        }
        s
    }
}

pub(crate) fn rational_literal(c: &Rational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("({}/{})", c.numer(), c.denom())
    }
}

fn monomial_display(abs: &Rational, e: i64, var: &str) -> String {
    let var_part = match e {
        0 => String::new(),
        1 => var.to_string(),
        _ => format!("{var}^{e}"),
    };
    if var_part.is_empty() {
        rational_literal(abs)
    } else if abs.is_one() {
        var_part
    } else {
        format!("{}*{}", rational_literal(abs), var_part)
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.eval_display("z"))
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.eval_display("z"))
    }
}

impl AddAssign<&LaurentPoly> for LaurentPoly {
    fn add_assign(&mut self, rhs: &LaurentPoly) {
        for (e, c) in &rhs.coeffs {
            self.add_term(*e, c.clone());
        }
    }
}

impl SubAssign<&LaurentPoly> for LaurentPoly {
    fn sub_assign(&mut self, rhs: &LaurentPoly) {
        for (e, c) in &rhs.coeffs {
            self.add_term(*e, -c.clone());
        }
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, -c.clone())).collect(),
        }
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (e1, c1) in &self.coeffs {
            for (e2, c2) in &rhs.coeffs {
                out.add_term(e1 + e2, c1 * c2);
            }
        }
        out
    }
}

//! Plain-text grammar for superfunctions and derivations.
//!
//! ```text
//! (3/2)z^-2*eta1*eta3*eta4*d(theta1) + z^4*theta1*eta1*d(z)
//! (z^-2*eta1 + z^-8*eta2)*eta3*eta4*d(theta1)
//! ```
//!
//! Whitespace is ignored, `*` between factors is optional, parenthesised
//! sums distribute, and the `d(..)` factor of a derivation term must come
//! last (coefficient-left normal form).

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::derivation::{term_degree, Direction, SuperDerivation};
use super::function::SuperFunction;
use super::laurent::{rational_literal, LaurentPoly, Rational};
use super::odd::OddMonomial;
use super::AlgebraError;

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Function(SuperFunction),
    Derivation(SuperDerivation),
}

pub fn parse_function(text: &str, names: &[String], base_var: &str) -> Result<SuperFunction, AlgebraError> {
    match Parser::new(text, names, base_var).parse_all()? {
        Value::Function(f) => Ok(f),
        Value::Derivation(_) => Err(AlgebraError::Parse {
            pos: 0,
            message: "expected a function, found a derivation".into(),
        }),
    }
}

pub fn parse_derivation(text: &str, names: &[String], base_var: &str) -> Result<SuperDerivation, AlgebraError> {
    match Parser::new(text, names, base_var).parse_all()? {
        Value::Derivation(d) => Ok(d),
        Value::Function(f) if f.is_zero() => Ok(SuperDerivation::zero()),
        Value::Function(_) => Err(AlgebraError::Parse {
            pos: 0,
            message: "expected a derivation, found a function without d(..)".into(),
        }),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    names: &'a [String],
    base_var: &'a str,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, names: &'a [String], base_var: &'a str) -> Self {
        Self {
            src: text.as_bytes(),
            pos: 0,
            names,
            base_var,
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, AlgebraError> {
        Err(AlgebraError::Parse {
            pos: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_all(&mut self) -> Result<Value, AlgebraError> {
        if self.peek().is_none() {
            return self.err("empty expression");
        }
        let v = self.parse_sum()?;
        if self.peek().is_some() {
            return self.err("unexpected trailing input");
        }
        Ok(v)
    }

    fn parse_sum(&mut self) -> Result<Value, AlgebraError> {
        let mut negate = false;
        if self.eat(b'-') {
            negate = true;
        } else {
            self.eat(b'+');
        }
        let mut acc = self.parse_product()?;
        if negate {
            acc = neg(acc);
        }
        loop {
            let start = self.pos;
            let sign = if self.eat(b'+') {
                false
            } else if self.eat(b'-') {
                true
            } else {
                break;
            };
            let mut rhs = self.parse_product()?;
            if sign {
                rhs = neg(rhs);
            }
            acc = match (acc, rhs) {
                (Value::Function(a), Value::Function(b)) => Value::Function(&a + &b),
                (Value::Derivation(a), Value::Derivation(b)) => Value::Derivation(&a + &b),
                _ => {
                    self.pos = start;
                    return self.err("cannot add a function and a derivation");
                }
            };
        }
        Ok(acc)
    }

    fn starts_factor(&mut self) -> bool {
        matches!(self.peek(), Some(c) if c == b'(' || c.is_ascii_alphanumeric() || c == b'_')
    }

    fn parse_product(&mut self) -> Result<Value, AlgebraError> {
        let mut acc = self.parse_factor()?;
        loop {
            let explicit = self.eat(b'*');
            if !explicit && !self.starts_factor() {
                break;
            }
            let start = self.pos;
            let rhs = self.parse_factor()?;
            acc = match (acc, rhs) {
                (Value::Function(a), Value::Function(b)) => Value::Function(&a * &b),
                (Value::Function(a), Value::Derivation(d)) => Value::Derivation(d.left_mul(&a)),
                (Value::Derivation(_), _) => {
                    self.pos = start;
                    return self.err("the d(..) factor must be the last factor of a term");
                }
            };
        }
        Ok(acc)
    }

    fn parse_int(&mut self) -> Result<BigInt, AlgebraError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected an integer");
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(s.parse().unwrap())
    }

    fn parse_ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn parse_factor(&mut self) -> Result<Value, AlgebraError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.parse_sum()?;
                if !self.eat(b')') {
                    return self.err("expected `)`");
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.parse_int()?;
                let mut q = Rational::from_integer(num);
                if self.eat(b'/') {
                    let den = self.parse_int()?;
                    if den.is_zero() {
                        return self.err("zero denominator");
                    }
                    q /= Rational::from_integer(den);
                }
                Ok(Value::Function(SuperFunction::from_poly(LaurentPoly::constant(q))))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                let ident = self.parse_ident();
                if ident == "d" && self.peek() == Some(b'(') {
                    self.pos += 1;
                    let inner_start = self.pos;
                    let target = self.parse_ident();
                    let dir = if target == self.base_var {
                        Direction::Base
                    } else if let Some(i) = self.names.iter().position(|n| *n == target) {
                        Direction::Odd(i)
                    } else {
                        self.pos = inner_start;
                        return Err(AlgebraError::UnknownGenerator(target));
                    };
                    if !self.eat(b')') {
                        return self.err("expected `)` after d(..");
                    }
                    return Ok(Value::Derivation(SuperDerivation::along(SuperFunction::one(), dir)));
                }
                if ident == self.base_var {
                    let mut exp = 1i64;
                    if self.eat(b'^') {
                        let negative = self.eat(b'-');
                        let e = self.parse_int()?;
                        let e: i64 = match i64::try_from(e) {
                            Ok(e) => e,
                            Err(_) => return self.err("exponent out of range"),
                        };
                        exp = if negative { -e } else { e };
                    }
                    return Ok(Value::Function(SuperFunction::from_poly(LaurentPoly::z_pow(exp))));
                }
                match self.names.iter().position(|n| *n == ident) {
                    Some(i) => Ok(Value::Function(SuperFunction::generator(i))),
                    None => {
                        self.pos = start;
                        Err(AlgebraError::UnknownGenerator(ident))
                    }
                }
            }
            Some(_) => self.err("unexpected character"),
            None => self.err("unexpected end of input"),
        }
    }
}

fn neg(v: Value) -> Value {
    match v {
        Value::Function(f) => Value::Function(-&f),
        Value::Derivation(d) => Value::Derivation(-&d),
    }
}

fn term_body(
    c: &Rational,
    exp: i64,
    mono: OddMonomial,
    dir: Option<Direction>,
    names: &[String],
    base_var: &str,
) -> String {
    let mut factors: Vec<String> = Vec::new();
    let abs = c.abs();
    match exp {
        0 => {}
        1 => factors.push(base_var.to_string()),
        e => factors.push(format!("{base_var}^{e}")),
    }
    for i in mono.indices() {
        factors.push(names.get(i).cloned().unwrap_or_else(|| format!("xi{i}")));
    }
    if let Some(d) = dir {
        factors.push(match d {
            Direction::Base => format!("d({base_var})"),
            Direction::Odd(i) => format!("d({})", names.get(i).cloned().unwrap_or_else(|| format!("xi{i}"))),
        });
    }
    if !abs.is_one() || factors.is_empty() {
        factors.insert(0, rational_literal(&abs));
    }
    factors.join("*")
}

fn join_signed(parts: Vec<(bool, String)>) -> String {
    if parts.is_empty() {
        return "0".into();
    }
    let mut s = String::new();
    for (i, (negative, body)) in parts.into_iter().enumerate() {
        match (i, negative) {
            (0, true) => s.push('-'),
            (0, false) => {}
            (_, true) => s.push_str(" - "),
            (_, false) => s.push_str(" + "),
        }
        s.push_str(&body);
    }
    s
}

pub fn format_function(f: &SuperFunction, names: &[String], base_var: &str) -> String {
    let mut parts = Vec::new();
    for (m, p) in f.terms() {
        for (e, c) in p.terms() {
            parts.push((c.is_negative(), term_body(c, e, m, None, names, base_var)));
        }
    }
    join_signed(parts)
}

/// Canonical rendering: terms ordered by (odd monomial mask, direction,
/// exponent).
pub fn format_derivation(d: &SuperDerivation, names: &[String], base_var: &str) -> String {
    let mut terms: Vec<(OddMonomial, Direction, i64, Rational)> = Vec::new();
    for (m, dir, p) in d.terms() {
        for (e, c) in p.terms() {
            terms.push((m, dir, e, c.clone()));
        }
    }
    terms.sort_by_key(|a| (a.0, a.1, a.2));
    let parts = terms
        .into_iter()
        .map(|(m, dir, e, c)| (c.is_negative(), term_body(&c, e, m, Some(dir), names, base_var)))
        .collect();
    join_signed(parts)
}

/// Rendering of one monomial derivation shape without coefficient, e.g.
/// `theta1*theta2*d(z)`.
pub fn format_shape(mono: OddMonomial, dir: Direction, names: &[String], base_var: &str) -> String {
    term_body(&Rational::one(), 0, mono, Some(dir), names, base_var)
}

/// Z-degree of a parsed shape, for reporting.
pub fn shape_degree(mono: OddMonomial, dir: Direction) -> i64 {
    term_degree(mono, dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superalgebra::laurent::{rat, ratio};

    fn names() -> Vec<String> {
        ["theta1", "theta2", "theta3", "eta1", "eta2", "eta3", "eta4"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn parses_distributed_deformation() {
        let y = parse_derivation("(z^-2*eta1 + z^-8*eta2)*eta3*eta4*d(theta1)", &names(), "z").unwrap();
        let mut expected = SuperDerivation::zero();
        expected.add_term(
            OddMonomial::from_indices(&[3, 5, 6]).unwrap(),
            Direction::Odd(0),
            &LaurentPoly::z_pow(-2),
        );
        expected.add_term(
            OddMonomial::from_indices(&[4, 5, 6]).unwrap(),
            Direction::Odd(0),
            &LaurentPoly::z_pow(-8),
        );
        assert_eq!(y, expected);
    }

    #[test]
    fn implicit_multiplication_and_rationals() {
        let d = parse_derivation(
            "(3/2)z^-2*eta1*eta3*eta4*d(theta1) + z^4*theta1*eta1*d(z)",
            &names(),
            "z",
        )
        .unwrap();
        assert_eq!(
            d.coeff(OddMonomial::from_indices(&[3, 5, 6]).unwrap(), Direction::Odd(0)),
            LaurentPoly::monomial(-2, ratio(3, 2))
        );
        assert_eq!(
            format_derivation(&d, &names(), "z"),
            "z^4*theta1*eta1*d(z) + (3/2)*z^-2*eta1*eta3*eta4*d(theta1)"
        );
    }

    #[test]
    fn reordering_picks_up_signs() {
        let d = parse_derivation("eta1*theta1*d(z)", &names(), "z").unwrap();
        assert_eq!(
            d.coeff(OddMonomial::from_indices(&[0, 3]).unwrap(), Direction::Base),
            LaurentPoly::constant(rat(-1))
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            parse_derivation("z*kappa*d(z)", &names(), "z"),
            Err(AlgebraError::UnknownGenerator(n)) if n == "kappa"
        ));
        assert!(matches!(
            parse_derivation("d(z)*theta1", &names(), "z"),
            Err(AlgebraError::Parse { .. })
        ));
        assert!(parse_derivation("theta1 + d(z)", &names(), "z").is_err());
        assert!(parse_derivation("", &names(), "z").is_err());
    }

    #[test]
    fn round_trips_through_text() {
        let text = "-z^2*theta1*eta2*eta3*d(eta3) + theta1*eta1*eta2*eta3*eta4*d(theta1)";
        let d = parse_derivation(text, &names(), "z").unwrap();
        let again = parse_derivation(&format_derivation(&d, &names(), "z"), &names(), "z").unwrap();
        assert_eq!(d, again);
    }
}

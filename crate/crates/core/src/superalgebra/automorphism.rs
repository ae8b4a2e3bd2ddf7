use num_traits::One;

use super::derivation::{Direction, SuperDerivation};
use super::function::SuperFunction;
use super::laurent::{rat, Rational};
use super::AlgebraError;

/// Bound on series length; nilpotency ends every legitimate series long
/// before this.
const SERIES_LIMIT: usize = 256;

/// Unipotent automorphism `exp(log)` of the split superfunction sheaf on
/// one chart, stored by its logarithm.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SuperAutomorphism {
    log: SuperDerivation,
}

/// `exp(Y)` for an even derivation of filtration degree at least 2.
pub fn exp_aut(y: &SuperDerivation) -> Result<SuperAutomorphism, AlgebraError> {
    if !y.is_even() {
        return Err(AlgebraError::OddLog);
    }
    if let Some(k) = y.min_degree() {
        if k < 2 {
            return Err(AlgebraError::LowDegreeLog(k));
        }
    }
    Ok(SuperAutomorphism { log: y.clone() })
}

pub fn log_aut(a: &SuperAutomorphism) -> SuperDerivation {
    a.log.clone()
}

impl SuperAutomorphism {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn log(&self) -> &SuperDerivation {
        &self.log
    }

    pub fn is_identity(&self) -> bool {
        self.log.is_zero()
    }

    pub fn inverse(&self) -> Self {
        Self { log: -&self.log }
    }

    /// `exp(Y)(f) = sum_n Y^n(f) / n!`, stopping at the first zero term.
    pub fn apply(&self, f: &SuperFunction) -> SuperFunction {
        let mut out = f.clone();
        let mut term = f.clone();
        for n in 1..SERIES_LIMIT {
            term = self.log.apply(&term).scale(&(Rational::one() / rat(n as i64)));
            if term.is_zero() {
                return out;
            }
            out += &term;
        }
        panic!("exp series did not terminate; log is not nilpotent");
    }

    /// `alpha X alpha^-1 = sum_n ad_Y^n(X) / n!`.
    pub fn conjugate(&self, x: &SuperDerivation) -> SuperDerivation {
        let mut out = x.clone();
        let mut term = x.clone();
        for n in 1..SERIES_LIMIT {
            term = self.log.bracket(&term).scale(&(Rational::one() / rat(n as i64)));
            if term.is_zero() {
                return out;
            }
            out += &term;
        }
        panic!("ad series did not terminate; log is not nilpotent");
    }

    /// Recover an automorphism from its action on functions, via
    /// `log(1 + N) = sum_k (-1)^(k+1) N^k / k` evaluated on the coordinates
    /// `z, xi_0, ..., xi_(n-1)`.
    pub fn from_operator(
        n_generators: usize,
        op: impl Fn(&SuperFunction) -> SuperFunction,
    ) -> Result<Self, AlgebraError> {
        let dirs = std::iter::once(Direction::Base).chain((0..n_generators).map(Direction::Odd));
        let mut log = SuperDerivation::zero();
        for dir in dirs {
            let x = dir.coordinate();
            let mut value = SuperFunction::zero();
            let mut power = x.clone();
            let mut done = false;
            for k in 1..SERIES_LIMIT {
                power = &op(&power) - &power;
                if power.is_zero() {
                    done = true;
                    break;
                }
                let c = if k % 2 == 1 { rat(1) } else { rat(-1) } / rat(k as i64);
                value += &power.scale(&c);
            }
            if !done {
                return Err(AlgebraError::NotUnipotent);
            }
            log.add_along(&value, dir);
        }
        exp_aut(&log)
    }

    /// `self . other` as operators on functions (apply `other` first).
    pub fn compose(&self, other: &SuperAutomorphism, n_generators: usize) -> Result<Self, AlgebraError> {
        Self::from_operator(n_generators, |f| self.apply(&other.apply(f)))
    }
}

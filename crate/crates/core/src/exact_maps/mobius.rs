use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rat::{format_rat, to_f64, Rat};

/// `x ↦ (a x + b) / (c x + d)` on `[0, 1]` with exact rational coefficients.
///
/// Invariants: `d > 0`, `c + d > 0` (denominator positive on `[0, 1]`) and
/// `a d - b c > 0` (strictly increasing). Coefficients are stored as given;
/// [`MobiusMap::normalized`] produces the primitive integer representative.
#[derive(Clone, Debug)]
pub struct MobiusMap {
    pub a: Rat,
    pub b: Rat,
    pub c: Rat,
    pub d: Rat,
}

impl MobiusMap {
    pub fn new(a: Rat, b: Rat, c: Rat, d: Rat) -> Result<Self> {
        let m = MobiusMap { a, b, c, d };
        if !m.d.is_positive() || !(&m.c + &m.d).is_positive() {
            return Err(Error::InvalidMap(format!("{m}: denominator vanishes on [0,1] (need d > 0, c + d > 0)")));
        }
        if !m.det().is_positive() {
            return Err(Error::InvalidMap(format!("{m}: not strictly increasing (ad - bc <= 0)")));
        }
        Ok(m)
    }

    pub(crate) fn new_unchecked(a: Rat, b: Rat, c: Rat, d: Rat) -> Self {
        MobiusMap { a, b, c, d }
    }

    pub fn from_ints(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let r = |v: i64| Rat::from_integer(BigInt::from(v));
        Self::new(r(a), r(b), r(c), r(d))
    }

    pub fn identity() -> Self {
        MobiusMap::new_unchecked(Rat::one(), Rat::zero(), Rat::zero(), Rat::one())
    }

    pub fn det(&self) -> Rat {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn eval(&self, x: &Rat) -> Result<Rat> {
        if x.is_negative() || x > &Rat::one() {
            return Err(Error::Domain { value: format_rat(x) });
        }
        Ok(self.apply(x))
    }

    /// Evaluation without the `[0, 1]` domain check.
    pub fn apply(&self, x: &Rat) -> Rat {
        (&self.a * x + &self.b) / (&self.c * x + &self.d)
    }

    pub fn apply_f64(&self, x: f64) -> f64 {
        let [a, b, c, d] = self.coeffs_f64();
        (a * x + b) / (c * x + d)
    }

    pub fn coeffs_f64(&self) -> [f64; 4] {
        [to_f64(&self.a), to_f64(&self.b), to_f64(&self.c), to_f64(&self.d)]
    }

    /// `h(0)`.
    pub fn at_zero(&self) -> Rat {
        &self.b / &self.d
    }

    /// `h(1)`.
    pub fn at_one(&self) -> Rat {
        (&self.a + &self.b) / (&self.c + &self.d)
    }

    /// `self ∘ inner`: the coefficient matrix product, normalized.
    pub fn compose(&self, inner: &MobiusMap) -> MobiusMap {
        MobiusMap::new_unchecked(
            &self.a * &inner.a + &self.b * &inner.c,
            &self.a * &inner.b + &self.b * &inner.d,
            &self.c * &inner.a + &self.d * &inner.c,
            &self.c * &inner.b + &self.d * &inner.d,
        )
        .normalized()
    }

    /// Primitive integer coefficients (common factor removed) with `d > 0`.
    pub fn normalized(&self) -> MobiusMap {
        let coeffs = [&self.a, &self.b, &self.c, &self.d];
        let lcm = coeffs.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let ints: Vec<BigInt> = coeffs.iter().map(|x| (*x * Rat::from_integer(lcm.clone())).to_integer()).collect();
        let mut g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
        if g.is_zero() {
            g = BigInt::one();
        }
        if ints[3].is_negative() {
            g = -g;
        }
        let r = |x: &BigInt| Rat::from_integer(x / &g);
        MobiusMap::new_unchecked(r(&ints[0]), r(&ints[1]), r(&ints[2]), r(&ints[3]))
    }

    /// Representative with `d = 1`.
    pub fn unit_d(&self) -> MobiusMap {
        MobiusMap::new_unchecked(&self.a / &self.d, &self.b / &self.d, &self.c / &self.d, Rat::one())
    }

    /// Smallest value of the denominator `c x + d` on `[0, 1]`.
    pub fn min_denominator(&self) -> Rat {
        let e = &self.c + &self.d;
        if e < self.d {
            e
        } else {
            self.d.clone()
        }
    }

    pub fn max_denominator(&self) -> Rat {
        let e = &self.c + &self.d;
        if e > self.d {
            e
        } else {
            self.d.clone()
        }
    }

    /// `max h'` on `[0, 1]`, which is the Lipschitz constant.
    pub fn max_derivative(&self) -> Rat {
        let m = self.min_denominator();
        self.det() / (&m * &m)
    }

    pub fn min_derivative(&self) -> Rat {
        let m = self.max_denominator();
        self.det() / (&m * &m)
    }

    /// `h(1) - h(0)`.
    pub fn width(&self) -> Rat {
        self.at_one() - self.at_zero()
    }

    /// `(h(x) - h(y)) / (x - y)` computed without cancellation.
    pub fn divided_difference_f64(&self, x: f64, y: f64) -> f64 {
        let [a, b, c, d] = self.coeffs_f64();
        (a * d - b * c) / ((c * x + d) * (c * y + d))
    }

    /// Inverse map `y ↦ (d y - b) / (-c y + a)`; defined on the image interval.
    pub fn inverse_apply(&self, y: &Rat) -> Rat {
        (&self.d * y - &self.b) / (&self.a - &self.c * y)
    }

    /// Condition `0 < ad - bc <= min(d², (c+d)²)`.
    pub fn satisfies_weak_condition(&self) -> bool {
        let m = self.min_denominator();
        let det = self.det();
        det.is_positive() && det <= &m * &m
    }

    /// Condition `0 < ad - bc < min(d², (c+d)²)`.
    pub fn satisfies_strict_condition(&self) -> bool {
        let m = self.min_denominator();
        let det = self.det();
        det.is_positive() && det < &m * &m
    }
}

impl PartialEq for MobiusMap {
    fn eq(&self, other: &Self) -> bool {
        let (x, y) = (self.normalized(), other.normalized());
        x.a == y.a && x.b == y.b && x.c == y.c && x.d == y.d
    }
}

impl fmt::Display for MobiusMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({} x + {}) / ({} x + {})",
            format_rat(&self.a),
            format_rat(&self.b),
            format_rat(&self.c),
            format_rat(&self.d)
        )
    }
}

use std::fmt;

use num_traits::{One, Signed, Zero};

use super::mobius::MobiusMap;
use crate::error::{Error, Result};
use crate::rat::{format_rat, to_f64, Rat};

/// `x ↦ slope · x + intercept` with exact coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub slope: Rat,
    pub intercept: Rat,
}

impl AffineMap {
    pub fn new(slope: Rat, intercept: Rat) -> Result<Self> {
        if !slope.is_positive() {
            return Err(Error::InvalidMap(format!("affine slope {} must be positive", format_rat(&slope))));
        }
        if intercept.is_negative() || &slope + &intercept > Rat::one() {
            return Err(Error::InvalidMap(format!(
                "affine map {} x + {} does not map [0,1] into [0,1]",
                format_rat(&slope),
                format_rat(&intercept)
            )));
        }
        Ok(AffineMap { slope, intercept })
    }

    pub fn to_mobius(&self) -> MobiusMap {
        MobiusMap::new_unchecked(self.slope.clone(), self.intercept.clone(), Rat::zero(), Rat::one())
    }
}

/// `x ↦ b + a x + c x (1 - x)`, a non-affine contraction with closed-form
/// Lipschitz constant `max(|a + c|, |a - c|) = a + |c|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadMap {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let m = QuadMap { a, b, c };
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::InvalidMap(format!("{m}: non-finite coefficient")));
        }
        if a <= c.abs() {
            return Err(Error::InvalidMap(format!("{m}: need a > |c| for strict increase")));
        }
        if b < -1e-12 || b + a > 1.0 + 1e-12 {
            return Err(Error::InvalidMap(format!("{m}: image not inside [0,1]")));
        }
        Ok(m)
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.b + self.a * x + self.c * x * (1.0 - x)
    }

    pub fn lip(&self) -> f64 {
        (self.a + self.c).abs().max((self.a - self.c).abs())
    }

    pub fn divided_difference(&self, x: f64, y: f64) -> f64 {
        self.a + self.c * (1.0 - x - y)
    }
}

impl fmt::Display for QuadMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {} x + {} x(1-x)", self.b, self.a, self.c)
    }
}

/// Strictly increasing continuous self-map of `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub enum IntervalMap {
    Mobius(MobiusMap),
    Affine(AffineMap),
    Quad(QuadMap),
}

/// Lipschitz constant, exact where the coefficients are.
#[derive(Clone, Debug, PartialEq)]
pub enum Lip {
    Exact(Rat),
    Float(f64),
}

impl Lip {
    pub fn to_f64(&self) -> f64 {
        match self {
            Lip::Exact(r) => to_f64(r),
            Lip::Float(x) => *x,
        }
    }
}

/// Upper bound `t ↦ ω(t)` for the modulus of continuity.
#[derive(Clone, Debug, PartialEq)]
pub enum Modulus {
    /// `t / (c t + 1)` with `c > 0`.
    Hyperbolic { c: f64 },
    /// `(1 + c) t / (-c t + 1 + c)` with `-1 < c < 0`.
    Reflected { c: f64 },
    /// `slope · t`.
    Linear { slope: f64 },
    /// `t (a + |c| (1 - t))`, exact for [`QuadMap`].
    Quadratic { a: f64, c_abs: f64 },
}

impl Modulus {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Modulus::Hyperbolic { c } => t / (c * t + 1.0),
            Modulus::Reflected { c } => (1.0 + c) * t / (-c * t + 1.0 + c),
            Modulus::Linear { slope } => slope * t,
            Modulus::Quadratic { a, c_abs } => t * (a + c_abs * (1.0 - t.min(1.0))),
        }
    }

    /// `ω(t) < t` for every sampled `t` in `(0, 1]`.
    pub fn is_weakly_contractive(&self) -> bool {
        match *self {
            Modulus::Hyperbolic { c } => c > 0.0,
            Modulus::Reflected { c } => c < 0.0 && c > -1.0,
            Modulus::Linear { slope } => slope < 1.0,
            Modulus::Quadratic { a, c_abs } => a + c_abs < 1.0 || (a + c_abs <= 1.0 + 1e-15 && c_abs > 0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LipInfo {
    pub lip: Lip,
    pub modulus: Modulus,
}

impl IntervalMap {
    pub fn mobius(a: Rat, b: Rat, c: Rat, d: Rat) -> Result<Self> {
        Ok(IntervalMap::Mobius(MobiusMap::new(a, b, c, d)?))
    }

    pub fn affine(slope: Rat, intercept: Rat) -> Result<Self> {
        Ok(IntervalMap::Affine(AffineMap::new(slope, intercept)?))
    }

    pub fn quad(a: f64, b: f64, c: f64) -> Result<Self> {
        Ok(IntervalMap::Quad(QuadMap::new(a, b, c)?))
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, IntervalMap::Quad(_))
    }

    /// Exact Möbius form for exact maps (affine maps have `c = 0, d = 1`).
    pub fn as_mobius(&self) -> Option<MobiusMap> {
        match self {
            IntervalMap::Mobius(m) => Some(m.clone()),
            IntervalMap::Affine(a) => Some(a.to_mobius()),
            IntervalMap::Quad(_) => None,
        }
    }

    pub fn eval_rat(&self, x: &Rat) -> Result<Rat> {
        if x.is_negative() || x > &Rat::one() {
            return Err(Error::Domain { value: format_rat(x) });
        }
        match self {
            IntervalMap::Mobius(m) => Ok(m.apply(x)),
            IntervalMap::Affine(a) => Ok(&a.slope * x + &a.intercept),
            IntervalMap::Quad(_) => Err(Error::NotExact),
        }
    }

    pub fn eval_f64(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain { value: x.to_string() });
        }
        Ok(self.apply_f64(x))
    }

    pub fn apply_f64(&self, x: f64) -> f64 {
        match self {
            IntervalMap::Mobius(m) => m.apply_f64(x),
            IntervalMap::Affine(a) => to_f64(&a.slope) * x + to_f64(&a.intercept),
            IntervalMap::Quad(q) => q.apply(x),
        }
    }

    pub fn divided_difference_f64(&self, x: f64, y: f64) -> f64 {
        match self {
            IntervalMap::Mobius(m) => m.divided_difference_f64(x, y),
            IntervalMap::Affine(a) => to_f64(&a.slope),
            IntervalMap::Quad(q) => q.divided_difference(x, y),
        }
    }

    pub fn lip(&self) -> Lip {
        match self {
            IntervalMap::Mobius(m) => Lip::Exact(m.max_derivative()),
            IntervalMap::Affine(a) => Lip::Exact(a.slope.clone()),
            IntervalMap::Quad(q) => Lip::Float(q.lip()),
        }
    }

    /// Lipschitz constant plus a modulus-of-continuity bound.
    ///
    /// Möbius maps satisfying the weak-contraction condition get the bounds
    /// `t/(ct+1)` (`c > 0`), `(1+c)t/(-ct+1+c)` (`c < 0`), `a t` (`c = 0`) in
    /// the `d = 1` normalization; any other exact map falls back to `Lip · t`.
    pub fn lipschitz_and_modulus(&self) -> LipInfo {
        let lip = self.lip();
        let modulus = match self {
            IntervalMap::Mobius(m) if m.satisfies_weak_condition() => {
                let u = m.unit_d();
                let c = to_f64(&u.c);
                if u.c.is_positive() {
                    Modulus::Hyperbolic { c }
                } else if u.c.is_negative() {
                    Modulus::Reflected { c }
                } else {
                    Modulus::Linear { slope: to_f64(&u.a) }
                }
            }
            IntervalMap::Quad(q) => Modulus::Quadratic { a: q.a, c_abs: q.c.abs() },
            _ => Modulus::Linear { slope: lip.to_f64() },
        };
        LipInfo { lip, modulus }
    }

    /// Weak contraction in the modulus sense (`φ_h(t) < t` for `t > 0`).
    pub fn is_weakly_contractive(&self) -> bool {
        match self {
            IntervalMap::Mobius(m) => {
                m.satisfies_weak_condition() && !(m.c.is_zero() && m.a == m.d)
            }
            IntervalMap::Affine(a) => a.slope < Rat::one(),
            IntervalMap::Quad(_) => self.lipschitz_and_modulus().modulus.is_weakly_contractive(),
        }
    }

    pub fn is_contraction(&self) -> bool {
        match self.lip() {
            Lip::Exact(r) => r < Rat::one(),
            Lip::Float(x) => x < 1.0,
        }
    }
}

impl fmt::Display for IntervalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntervalMap::Mobius(m) => write!(f, "{m}"),
            IntervalMap::Affine(a) => write!(f, "{} x + {}", format_rat(&a.slope), format_rat(&a.intercept)),
            IntervalMap::Quad(q) => write!(f, "{q}"),
        }
    }
}

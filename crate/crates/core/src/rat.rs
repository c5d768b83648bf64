//! Exact rational helpers on top of `num-rational`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Arbitrary-precision rational, always in lowest terms with a positive denominator.
pub type Rat = num_rational::BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Fallback for extreme magnitudes: scale through logs.
        let (n, d) = (x.numer(), x.denom());
        let sign = if n.is_negative() { -1.0 } else { 1.0 };
        let ln = big_ln(&n.abs()) - big_ln(d);
        sign * ln.exp()
    })
}

fn big_ln(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top: BigInt = n >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Exact conversion of a finite float.
pub fn from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

/// Parses `"p/q"`, integers and decimal literals (`"0.3"`, `"-1.25e-2"`) exactly.
pub fn parse_rat(s: &str) -> Result<Rat, Error> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational literal: {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rat::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..].parse().map_err(|_| bad())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let negative = int_part.starts_with('-');
    let int_digits = int_part.trim_start_matches(['-', '+']);
    if !int_digits.chars().all(|c| c.is_ascii_digit()) || (int_digits.is_empty() && frac_part.is_empty()) {
        return Err(bad());
    }
    let digits = format!("{int_digits}{frac_part}");
    let digits = if digits.is_empty() { "0".to_string() } else { digits };
    let mut n = BigInt::from_str(&digits).map_err(|_| bad())?;
    if negative {
        n = -n;
    }
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    if scale.unsigned_abs() > 10_000 {
        return Err(bad());
    }
    Ok(if scale >= 0 {
        Rat::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        Rat::new(n, num_traits::pow(ten, (-scale) as usize))
    })
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_rat(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Exact square root when `x` is the square of a rational.
pub fn exact_sqrt(x: &Rat) -> Option<Rat> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
        Some(Rat::new(n, d))
    } else {
        None
    }
}

/// Rational enclosure `lo <= sqrt(x) <= hi` with `hi - lo <= 2^-bits`.
pub fn sqrt_enclosure(x: &Rat, bits: u32) -> (Rat, Rat) {
    assert!(!x.is_negative(), "square root of a negative rational");
    if let Some(r) = exact_sqrt(x) {
        return (r.clone(), r);
    }
    // floor(sqrt(x * 4^bits)) / 2^bits
    let scale = BigInt::one() << (2 * bits as usize);
    let scaled = (x * Rat::from_integer(scale)).floor().to_integer();
    let root = scaled.sqrt();
    let den = BigInt::one() << bits as usize;
    let lo = Rat::new(root.clone(), den.clone());
    let hi = Rat::new(root + 1, den);
    (lo, hi)
}

/// A real number of the form `p + q * sqrt(r)` with rational `p, q, r` and `r >= 0`.
///
/// Fixed points of the state-update maps are roots of rational quadratics and
/// live here; exact comparisons go through rational enclosures of the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    pub rational: Rat,
    pub coeff: Rat,
    pub radicand: Rat,
}

impl Surd {
    pub fn from_rat(x: Rat) -> Self {
        Surd { rational: x, coeff: Rat::zero(), radicand: Rat::zero() }
    }

    /// `p + q sqrt(r)`, folded to a rational when `r` is a perfect square.
    pub fn new(p: Rat, q: Rat, r: Rat) -> Self {
        assert!(!r.is_negative(), "negative radicand");
        match exact_sqrt(&r) {
            Some(s) => Surd::from_rat(p + q * s),
            None if q.is_zero() => Surd::from_rat(p),
            None => Surd { rational: p, coeff: q, radicand: r },
        }
    }

    pub fn as_rat(&self) -> Option<&Rat> {
        if self.coeff.is_zero() {
            Some(&self.rational)
        } else {
            None
        }
    }

    pub fn is_rational(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_rational() {
            return to_f64(&self.rational);
        }
        let (lo, hi) = self.enclosure(80);
        0.5 * (to_f64(&lo) + to_f64(&hi))
    }

    /// Rational interval containing the value; width shrinks like `2^-bits`.
    pub fn enclosure(&self, bits: u32) -> (Rat, Rat) {
        if self.is_rational() {
            return (self.rational.clone(), self.rational.clone());
        }
        let (slo, shi) = sqrt_enclosure(&self.radicand, bits);
        let (a, b) = (&self.coeff * &slo, &self.coeff * &shi);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        (&self.rational + lo, &self.rational + hi)
    }

    /// Exact comparison; irrational ties are resolved by escalating precision
    /// up to 4096 bits and then reported as equal.
    pub fn cmp_surd(&self, other: &Surd) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        if self == other {
            return Ordering::Equal;
        }
        if let (Some(a), Some(b)) = (self.as_rat(), other.as_rat()) {
            return a.cmp(b);
        }
        let mut bits = 64;
        while bits <= 4096 {
            let (alo, ahi) = self.enclosure(bits);
            let (blo, bhi) = other.enclosure(bits);
            if ahi < blo {
                return Ordering::Less;
            }
            if bhi < alo {
                return Ordering::Greater;
            }
            bits *= 2;
        }
        Ordering::Equal
    }

    pub fn cmp_rat(&self, x: &Rat) -> std::cmp::Ordering {
        self.cmp_surd(&Surd::from_rat(x.clone()))
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_rational() {
            write!(f, "{}", format_rat(&self.rational))
        } else {
            write!(
                f,
                "{} + {}*sqrt({}) (~{:.12})",
                format_rat(&self.rational),
                format_rat(&self.coeff),
                format_rat(&self.radicand),
                self.to_f64()
            )
        }
    }
}

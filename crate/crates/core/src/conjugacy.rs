//! The increasing solution `φ` of `g_i ∘ φ = φ ∘ f_i`: symbolic addresses,
//! evaluation of `φ` and `φ⁻¹`, cylinder masses of `μ_φ`, curve sampling and
//! the weak-regularity check.
//!
//! `φ` maps the `f`-cylinder of a word onto the `g`-cylinder of the same word,
//! so every evaluation is a simultaneous descent through both cylinder trees.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact_maps::{MapSystem, MobiusMap};
use crate::par::{self, Execution};
use crate::rat::{format_rat, from_f64, rat, to_f64, Rat};

/// Descent depth limit when every quantity is an exact rational.
pub const EXACT_DEPTH_CAP: usize = 4096;
/// Descent depth limit in floating point.
pub const FLOAT_DEPTH_CAP: usize = 1_000_000;

/// A point of `[0, 1]`, exact or floating.
#[derive(Clone, Debug, PartialEq)]
pub enum Num {
    Exact(Rat),
    Float(f64),
}

impl Num {
    pub fn to_f64(&self) -> f64 {
        match self {
            Num::Exact(r) => to_f64(r),
            Num::Float(x) => *x,
        }
    }

    pub fn as_rat(&self) -> Option<&Rat> {
        match self {
            Num::Exact(r) => Some(r),
            Num::Float(_) => None,
        }
    }

    fn check_unit(&self) -> Result<()> {
        let ok = match self {
            Num::Exact(r) => !r.is_negative() && r <= &Rat::one(),
            Num::Float(x) => (0.0..=1.0).contains(x),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain { value: self.to_string() })
        }
    }
}

impl From<Rat> for Num {
    fn from(r: Rat) -> Self {
        Num::Exact(r)
    }
}

impl From<f64> for Num {
    fn from(x: f64) -> Self {
        Num::Float(x)
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Exact(r) => f.write_str(&format_rat(r)),
            Num::Float(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Unique,
    /// `x` is the left endpoint of every cylinder along `symbols` (`i, 0, 0, …`).
    LeftRep,
    /// `x` is the right endpoint of every cylinder along `symbols` (`i−1, N−1, …`).
    RightRep,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Address {
    pub symbols: Vec<usize>,
    pub boundary: Boundary,
    /// The other representation of a cylinder endpoint.
    pub alternate: Option<Vec<usize>>,
}

trait Track {
    type V: Clone + PartialOrd;
    fn at(&self, t: &Self::V) -> Self::V;
    fn push(&mut self, i: usize);
}

struct ExactTrack {
    cur: MobiusMap,
    maps: Vec<MobiusMap>,
}

impl ExactTrack {
    fn new(sys: &MapSystem) -> Result<Self> {
        Ok(ExactTrack { cur: MobiusMap::identity(), maps: sys.mobius_maps().ok_or(Error::NotExact)? })
    }
}

impl Track for ExactTrack {
    type V = Rat;
    fn at(&self, t: &Rat) -> Rat {
        self.cur.apply(t)
    }
    fn push(&mut self, i: usize) {
        self.cur = self.cur.compose(&self.maps[i]);
    }
}

enum FloatTrack<'a> {
    /// Composition as a scaled coefficient matrix.
    Matrix { cur: [f64; 4], maps: Vec<[f64; 4]> },
    /// Word applied map by map (non-Möbius members).
    Word { sys: &'a MapSystem, word: Vec<usize> },
}

impl<'a> FloatTrack<'a> {
    fn new(sys: &'a MapSystem) -> Self {
        match sys.mobius_maps() {
            Some(ms) => FloatTrack::Matrix { cur: [1.0, 0.0, 0.0, 1.0], maps: ms.iter().map(|m| m.coeffs_f64()).collect() },
            None => FloatTrack::Word { sys, word: Vec::new() },
        }
    }
}

impl Track for FloatTrack<'_> {
    type V = f64;
    fn at(&self, &t: &f64) -> f64 {
        match self {
            FloatTrack::Matrix { cur: [a, b, c, d], .. } => (a * t + b) / (c * t + d),
            FloatTrack::Word { sys, word } => sys.apply_word_f64(word, t),
        }
    }
    fn push(&mut self, i: usize) {
        match self {
            FloatTrack::Matrix { cur, maps } => {
                let [a, b, c, d] = *cur;
                let [e, f, g, h] = maps[i];
                let m = [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h];
                let s = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
                *cur = m.map(|x| x / s);
            }
            FloatTrack::Word { word, .. } => word.push(i),
        }
    }
}

/// `h_0(0), h_1(0), …, h_{N−1}(0), 1`: the partition of `[0,1]` into first-level cylinders.
fn partition_rat(sys: &MapSystem) -> Result<Vec<Rat>> {
    let mut pts: Vec<Rat> = sys.maps().iter().map(|m| m.eval_rat(&Rat::zero())).collect::<Result<_>>()?;
    pts.push(Rat::one());
    Ok(pts)
}

fn partition_f64(sys: &MapSystem) -> Vec<f64> {
    let mut pts: Vec<f64> = sys.maps().iter().map(|m| m.apply_f64(0.0)).collect();
    pts.push(1.0);
    pts
}

/// Largest `k < N` whose child cylinder starts at or before `x`, and whether it starts at `x`.
fn pick<T: Track>(t: &T, pts: &[T::V], x: &T::V) -> (usize, bool) {
    let n = pts.len() - 1;
    let mut k = 0;
    let mut hit = false;
    for j in 0..n {
        let lo = t.at(&pts[j]);
        if lo <= *x {
            k = j;
            hit = lo == *x;
        } else {
            break;
        }
    }
    (k, hit)
}

fn address_walk<T: Track>(mut t: T, pts: &[T::V], x: &T::V, depth: usize) -> Address {
    let n = pts.len() - 1;
    let mut word = Vec::with_capacity(depth);
    while word.len() < depth {
        let (i, hit) = pick(&t, pts, x);
        if hit {
            let rest = depth - word.len() - 1;
            let mut left = word.clone();
            left.push(i);
            left.extend(std::iter::repeat_n(0, rest));
            if i == 0 {
                return Address { symbols: left, boundary: Boundary::Unique, alternate: None };
            }
            let mut right = word;
            right.push(i - 1);
            right.extend(std::iter::repeat_n(n - 1, rest));
            return Address { symbols: left, boundary: Boundary::LeftRep, alternate: Some(right) };
        }
        t.push(i);
        word.push(i);
    }
    Address { symbols: word, boundary: Boundary::Unique, alternate: None }
}

/// Symbolic address of `x` to the given depth by greedy cylinder descent.
///
/// A point that is an interior cylinder endpoint has two addresses; the one
/// ending in zeros is returned in `symbols`, the other in `alternate`.
pub fn address_of(sys: &MapSystem, x: &Num, depth: usize) -> Result<Address> {
    x.check_unit()?;
    let n = sys.len();
    let at_one = match x {
        Num::Exact(r) => r.is_one(),
        Num::Float(v) => *v == 1.0,
    };
    if at_one {
        return Ok(Address { symbols: vec![n - 1; depth], boundary: Boundary::Unique, alternate: None });
    }
    Ok(match (x, sys.is_exact()) {
        (Num::Exact(r), true) => address_walk(ExactTrack::new(sys)?, &partition_rat(sys)?, r, depth),
        _ => address_walk(FloatTrack::new(sys), &partition_f64(sys), &x.to_f64(), depth),
    })
}

/// A map pair `(f, g)` with the same alphabet; `φ` solves `g_i ∘ φ = φ ∘ f_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConjugacyPair {
    pub f: MapSystem,
    pub g: MapSystem,
}

impl ConjugacyPair {
    /// Both systems must be compatible and weakly contractive; `g` must be exact.
    pub fn new(f: MapSystem, g: MapSystem) -> Result<Self> {
        if f.len() != g.len() {
            return Err(Error::InvalidMap(format!("alphabet sizes differ: {} vs {}", f.len(), g.len())));
        }
        f.validate().check()?;
        g.validate().check()?;
        if !g.is_exact() {
            return Err(Error::InvalidMap("the g-system must be linear fractional or affine".into()));
        }
        Ok(ConjugacyPair { f, g })
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn is_exact(&self) -> bool {
        self.f.is_exact() && self.g.is_exact()
    }

    /// `(g, f)`, whose solution is `φ⁻¹`.
    pub fn exchanged(&self) -> ConjugacyPair {
        ConjugacyPair { f: self.g.clone(), g: self.f.clone() }
    }
}

/// `φ(x)` to within `err`; `exact` is set when the value is a known rational.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiValue {
    pub value: f64,
    pub err: f64,
    pub exact: Option<Rat>,
    pub depth: usize,
    pub converged: bool,
}

impl PhiValue {
    fn exact(r: Rat, depth: usize) -> Self {
        PhiValue { value: to_f64(&r), err: 0.0, exact: Some(r), depth, converged: true }
    }

    pub fn lower(&self) -> f64 {
        self.value - self.err
    }

    pub fn upper(&self) -> f64 {
        self.value + self.err
    }
}

enum Walk<V> {
    Hit(V, usize),
    Bracket { lo: V, hi: V, depth: usize, converged: bool },
}

fn phi_walk<F: Track, G: Track>(
    mut f: F,
    fpts: &[F::V],
    mut g: G,
    gpts: &[G::V],
    x: &F::V,
    width: impl Fn(&G::V, &G::V) -> f64,
    tol: f64,
    cap: usize,
) -> Walk<G::V> {
    let n = gpts.len() - 1;
    for depth in 0..cap {
        let (i, hit) = pick(&f, fpts, x);
        if hit {
            return Walk::Hit(g.at(&gpts[i]), depth);
        }
        f.push(i);
        g.push(i);
        let (lo, hi) = (g.at(&gpts[0]), g.at(&gpts[n]));
        if width(&lo, &hi) <= tol {
            return Walk::Bracket { lo, hi, depth: depth + 1, converged: true };
        }
    }
    Walk::Bracket { lo: g.at(&gpts[0]), hi: g.at(&gpts[n]), depth: cap, converged: false }
}

/// `φ(x)` by simultaneous descent of the `f`- and `g`-cylinder trees.
///
/// Stops when the `g`-cylinder is at most `tol` wide and returns its midpoint.
/// A cylinder endpoint `x = f_w(0)` gives the exact value `g_w(0)`.
pub fn phi_eval(pair: &ConjugacyPair, x: &Num, tol: f64) -> Result<PhiValue> {
    if !(tol > 0.0) {
        return Err(Error::Domain { value: format!("tol = {tol}") });
    }
    x.check_unit()?;
    match x {
        Num::Exact(r) if r.is_zero() => return Ok(PhiValue::exact(Rat::zero(), 0)),
        Num::Exact(r) if r.is_one() => return Ok(PhiValue::exact(Rat::one(), 0)),
        Num::Float(v) if *v == 0.0 => return Ok(PhiValue::exact(Rat::zero(), 0)),
        Num::Float(v) if *v == 1.0 => return Ok(PhiValue::exact(Rat::one(), 0)),
        _ => {}
    }
    match (x, pair.is_exact()) {
        (Num::Exact(r), true) => {
            let walk = phi_walk(
                ExactTrack::new(&pair.f)?,
                &partition_rat(&pair.f)?,
                ExactTrack::new(&pair.g)?,
                &partition_rat(&pair.g)?,
                r,
                |a, b| to_f64(&(b - a)),
                tol,
                EXACT_DEPTH_CAP,
            );
            Ok(match walk {
                Walk::Hit(v, depth) => PhiValue::exact(v, depth),
                Walk::Bracket { lo, hi, depth, converged } => {
                    let mid = (&lo + &hi) / rat(2, 1);
                    let err = to_f64(&(&hi - &lo)) * (0.5 + 1e-15) + f64::MIN_POSITIVE;
                    PhiValue { value: to_f64(&mid), err, exact: None, depth, converged }
                }
            })
        }
        _ => {
            let walk = phi_walk(
                FloatTrack::new(&pair.f),
                &partition_f64(&pair.f),
                FloatTrack::new(&pair.g),
                &partition_f64(&pair.g),
                &x.to_f64(),
                |a, b| b - a,
                tol,
                FLOAT_DEPTH_CAP,
            );
            let slack = |depth: usize| (depth as f64 + 1.0) * 8.0 * f64::EPSILON;
            Ok(match walk {
                Walk::Hit(v, depth) => {
                    PhiValue { value: v, err: slack(depth), exact: None, depth, converged: true }
                }
                Walk::Bracket { lo, hi, depth, converged } => PhiValue {
                    value: 0.5 * (lo + hi),
                    err: 0.5 * (hi - lo).abs() + slack(depth),
                    exact: None,
                    depth,
                    converged,
                },
            })
        }
    }
}

/// `φ⁻¹(y)`, evaluated as the solution for the exchanged pair.
///
/// The error bound is half the width of the final `f`-cylinder, which for a
/// weakly contractive `f` may shrink slowly; `converged` reports whether `tol`
/// was reached within the depth cap.
pub fn phi_inverse_eval(pair: &ConjugacyPair, y: &Num, tol: f64) -> Result<PhiValue> {
    phi_eval(&pair.exchanged(), y, tol)
}

/// `μ_φ` of the `f`-cylinder of `word`: the width of the `g`-cylinder.
pub fn mu_mass(pair: &ConjugacyPair, word: &[usize]) -> Result<Rat> {
    if word.is_empty() {
        return Ok(Rat::one());
    }
    let cyl = pair.g.cylinder(word)?;
    let (lo, hi) = cyl.exact().ok_or(Error::NotExact)?;
    Ok(hi - lo)
}

/// `μ_φ([u, v]) = φ(v) − φ(u)`.
pub fn mu_mass_interval(pair: &ConjugacyPair, u: &Num, v: &Num, tol: f64) -> Result<PhiValue> {
    if u.to_f64() > v.to_f64() {
        return Err(Error::Domain { value: format!("[{u}, {v}]") });
    }
    let a = phi_eval(pair, u, tol / 2.0)?;
    let b = phi_eval(pair, v, tol / 2.0)?;
    let exact = match (&a.exact, &b.exact) {
        (Some(x), Some(y)) => Some(y - x),
        _ => None,
    };
    Ok(match exact {
        Some(r) => PhiValue::exact(r, a.depth.max(b.depth)),
        None => PhiValue {
            value: (b.value - a.value).max(0.0),
            err: a.err + b.err,
            exact: None,
            depth: a.depth.max(b.depth),
            converged: a.converged && b.converged,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiPoint {
    pub x: f64,
    pub phi: f64,
    pub err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhiSample {
    pub points: Vec<PhiPoint>,
}

impl PhiSample {
    /// Strictly increasing in both coordinates, at the resolution of the error bounds.
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[1].x > w[0].x && w[1].phi + w[1].err + w[0].err > w[0].phi)
    }

    pub fn to_csv(&self, precision: usize) -> String {
        let mut s = String::from("x,phi,err\n");
        for p in &self.points {
            s.push_str(&format!("{:.prec$},{:.prec$},{:.prec$e}\n", p.x, p.phi, p.err, prec = precision));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleMode {
    /// `x = k/n`, `k = 0..=n`.
    Uniform,
    /// Left endpoints of all `f`-cylinders of the smallest depth `L` with `N^L >= n`, plus `1`.
    Endpoints,
}

pub fn sample_phi(pair: &ConjugacyPair, n: usize, tol: f64, mode: SampleMode, exec: Execution) -> Result<PhiSample> {
    if n < 2 {
        return Err(Error::Domain { value: format!("sample count {n} (need n >= 2)") });
    }
    let points = match mode {
        SampleMode::Uniform => {
            let exact = pair.is_exact();
            let vals = par::map_range(exec, n + 1, |k| {
                let x = if exact { Num::Exact(rat(k as i64, n as i64)) } else { Num::Float(k as f64 / n as f64) };
                phi_eval(pair, &x, tol).map(|v| PhiPoint { x: x.to_f64(), phi: v.value, err: v.err })
            });
            vals.into_iter().collect::<Result<Vec<_>>>()?
        }
        SampleMode::Endpoints => {
            let big_n = pair.n();
            let mut depth = 0;
            let mut count = 1usize;
            while count < n {
                count *= big_n;
                depth += 1;
            }
            let words: Vec<Vec<usize>> = (0..count)
                .map(|mut k| {
                    let mut w = vec![0; depth];
                    for slot in w.iter_mut().rev() {
                        *slot = k % big_n;
                        k /= big_n;
                    }
                    w
                })
                .collect();
            let mut pts = par::map_slice(exec, &words, |w| -> Result<PhiPoint> {
                let x = match pair.f.is_exact() {
                    true => to_f64(&pair.f.compose_word(w)?.at_zero()),
                    false => pair.f.apply_word_f64(w, 0.0),
                };
                let phi = to_f64(&pair.g.compose_word(w)?.at_zero());
                Ok(PhiPoint { x, phi, err: 0.0 })
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            pts.dedup_by(|a, b| a.x == b.x);
            pts.push(PhiPoint { x: 1.0, phi: 1.0, err: 0.0 });
            pts
        }
    };
    Ok(PhiSample { points })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularityReport {
    pub checked: usize,
    pub violations: Vec<(f64, f64)>,
    /// Smallest `log(bound) / log(mass)`; at least 1 exactly when the inequality holds.
    pub min_ratio: f64,
    pub worst: (f64, f64),
}

/// Checks `μ_φ([y−r, y+r]) >= c^{1 + C/r}` on a `grid × grid` set of centers
/// `y = (k + 1/2)/grid` and radii `r = j/grid`, with the interval clipped to `[0,1]`.
///
/// `c` is a lower growth constant of the `g`-system and `big_c` an upper one of
/// the `f`-system.
pub fn regularity_check(pair: &ConjugacyPair, c: f64, big_c: f64, grid: usize, tol: f64) -> Result<RegularityReport> {
    if !(c > 0.0 && c < 1.0 && big_c > 0.0) {
        return Err(Error::Domain { value: format!("c = {c}, C = {big_c}") });
    }
    let mut report = RegularityReport { checked: 0, violations: Vec::new(), min_ratio: f64::INFINITY, worst: (0.0, 0.0) };
    for k in 0..grid {
        for j in 1..=grid {
            let y = (k as f64 + 0.5) / grid as f64;
            let r = j as f64 / grid as f64;
            let (u, v) = ((y - r).max(0.0), (y + r).min(1.0));
            let (nu, nv) = match (from_f64(u), from_f64(v), pair.is_exact()) {
                (Some(a), Some(b), true) => (Num::Exact(a), Num::Exact(b)),
                _ => (Num::Float(u), Num::Float(v)),
            };
            let mass = mu_mass_interval(pair, &nu, &nv, tol)?;
            let lower = mass.lower().max(0.0);
            let log_bound = (1.0 + big_c / r) * c.ln();
            let ratio = if lower >= 1.0 {
                f64::INFINITY
            } else if lower > 0.0 {
                log_bound / lower.ln()
            } else {
                0.0
            };
            report.checked += 1;
            if lower.ln() < log_bound {
                report.violations.push((y, r));
            }
            if ratio < report.min_ratio {
                report.min_ratio = ratio;
                report.worst = (y, r);
            }
        }
    }
    Ok(report)
}

use std::fmt;

use num_traits::{One, Signed, Zero};

use super::maps::{IntervalMap, Lip};
use super::mobius::MobiusMap;
use crate::error::{Error, Result};
use crate::rat::{format_rat, to_f64, Rat};

/// Absolute tolerance for endpoint joints of floating-point maps.
pub const FLOAT_JOINT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemKind {
    /// Every map is exact and at least one is a genuine Möbius map.
    Lf,
    /// Every map is affine.
    Affine,
    /// At least one floating-point map.
    Mixed,
}

/// Ordered family `h_0, …, h_{N-1}` of interval maps.
#[derive(Clone, Debug, PartialEq)]
pub struct MapSystem {
    maps: Vec<IntervalMap>,
}

impl MapSystem {
    pub fn new(maps: Vec<IntervalMap>) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::InvalidMap(format!("a system needs N >= 2 maps, got {}", maps.len())));
        }
        Ok(MapSystem { maps })
    }

    /// Builds and requires the compatibility condition plus weak contractivity.
    pub fn new_validated(maps: Vec<IntervalMap>) -> Result<Self> {
        let sys = Self::new(maps)?;
        sys.validate().check()?;
        Ok(sys)
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn maps(&self) -> &[IntervalMap] {
        &self.maps
    }

    pub fn map(&self, i: usize) -> &IntervalMap {
        &self.maps[i]
    }

    pub fn kind(&self) -> SystemKind {
        if self.maps.iter().any(|m| !m.is_exact()) {
            SystemKind::Mixed
        } else if self.maps.iter().all(|m| matches!(m, IntervalMap::Affine(_))) {
            SystemKind::Affine
        } else {
            SystemKind::Lf
        }
    }

    pub fn is_exact(&self) -> bool {
        self.kind() != SystemKind::Mixed
    }

    /// Möbius forms of all maps, when the system is exact.
    pub fn mobius_maps(&self) -> Option<Vec<MobiusMap>> {
        self.maps.iter().map(|m| m.as_mobius()).collect()
    }

    pub fn lips(&self) -> Vec<Lip> {
        self.maps.iter().map(|m| m.lip()).collect()
    }

    pub fn lips_f64(&self) -> Vec<f64> {
        self.maps.iter().map(|m| m.lip().to_f64()).collect()
    }

    pub fn check_word(&self, word: &[usize]) -> Result<()> {
        match word.iter().find(|&&s| s >= self.len()) {
            Some(&symbol) => Err(Error::Symbol { symbol, n: self.len() }),
            None => Ok(()),
        }
    }

    /// Exact composition `h_{w_1} ∘ ⋯ ∘ h_{w_n}` (identity for the empty word).
    pub fn compose_word(&self, word: &[usize]) -> Result<MobiusMap> {
        self.check_word(word)?;
        let ms = self.mobius_maps().ok_or(Error::NotExact)?;
        Ok(word.iter().fold(MobiusMap::identity(), |acc, &s| acc.compose(&ms[s])))
    }

    /// `h_{w_1} ∘ ⋯ ∘ h_{w_n}(x)` in floating point.
    pub fn apply_word_f64(&self, word: &[usize], x: f64) -> f64 {
        word.iter().rev().fold(x, |acc, &s| self.maps[s].apply_f64(acc))
    }

    /// Cylinder interval `[h_w(0), h_w(1)]`.
    pub fn cylinder(&self, word: &[usize]) -> Result<Interval> {
        if word.is_empty() {
            return Err(Error::InvalidMap("cylinder of the empty word".into()));
        }
        self.check_word(word)?;
        if self.is_exact() {
            let m = self.compose_word(word)?;
            return Ok(Interval::Exact { lo: m.at_zero(), hi: m.at_one() });
        }
        // Forward rounding errors are damped by each map's Lipschitz constant.
        let lips = self.lips_f64();
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut err = 0.0f64;
        for &s in word.iter().rev() {
            lo = self.maps[s].apply_f64(lo);
            hi = self.maps[s].apply_f64(hi);
            err = lips[s] * err + 4.0 * f64::EPSILON;
        }
        Ok(Interval::Float { lo, hi, err })
    }

    /// Compatibility chain, weak contractivity and the D-system verdict.
    pub fn validate(&self) -> SysReport {
        validate_compatible_system(self)
    }
}

/// A closed interval, exact or with an absolute error bound on each endpoint.
#[derive(Clone, Debug, PartialEq)]
pub enum Interval {
    Exact { lo: Rat, hi: Rat },
    Float { lo: f64, hi: f64, err: f64 },
}

impl Interval {
    pub fn lo_f64(&self) -> f64 {
        match self {
            Interval::Exact { lo, .. } => to_f64(lo),
            Interval::Float { lo, .. } => *lo,
        }
    }

    pub fn hi_f64(&self) -> f64 {
        match self {
            Interval::Exact { hi, .. } => to_f64(hi),
            Interval::Float { hi, .. } => *hi,
        }
    }

    pub fn width_f64(&self) -> f64 {
        match self {
            Interval::Exact { lo, hi } => to_f64(&(hi - lo)),
            Interval::Float { lo, hi, .. } => hi - lo,
        }
    }

    pub fn exact(&self) -> Option<(&Rat, &Rat)> {
        match self {
            Interval::Exact { lo, hi } => Some((lo, hi)),
            Interval::Float { .. } => None,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interval::Exact { lo, hi } => write!(f, "[{}, {}]", format_rat(lo), format_rat(hi)),
            Interval::Float { lo, hi, err } => write!(f, "[{lo}, {hi}] ± {err:e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointFailure {
    /// Joint index `i`: compares `h_{i-1}(1)` with `h_i(0)`; `0` is `h_0(0) = 0`
    /// and `N` is `h_{N-1}(1) = 1`.
    pub index: usize,
    pub left: String,
    pub right: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SysReport {
    pub n: usize,
    pub failed_joints: Vec<JointFailure>,
    pub weakly_contractive: Vec<bool>,
    pub compatible: bool,
    pub d_system: bool,
}

impl SysReport {
    pub fn check(&self) -> Result<()> {
        if !self.failed_joints.is_empty() {
            let list: Vec<String> = self
                .failed_joints
                .iter()
                .map(|j| format!("joint {}: {} != {}", j.index, j.left, j.right))
                .collect();
            return Err(Error::Incompatible(list.join("; ")));
        }
        if let Some(i) = self.weakly_contractive.iter().position(|w| !w) {
            return Err(Error::Condition(format!("map {i} is not a weak contraction")));
        }
        Ok(())
    }
}

pub fn validate_compatible_system(sys: &MapSystem) -> SysReport {
    let n = sys.len();
    let mut failed = Vec::new();
    let exact = sys.is_exact();
    // Endpoint values h_i(0), h_i(1).
    let point = |i: usize, at_one: bool| -> (Option<Rat>, f64) {
        let m = &sys.maps[i];
        if exact {
            let x = if at_one { Rat::one() } else { Rat::zero() };
            let v = m.eval_rat(&x).expect("exact map on exact input");
            let f = to_f64(&v);
            (Some(v), f)
        } else {
            (None, m.apply_f64(if at_one { 1.0 } else { 0.0 }))
        }
    };
    let describe = |v: &(Option<Rat>, f64)| match &v.0 {
        Some(r) => format_rat(r),
        None => format!("{}", v.1),
    };
    let equal = |u: &(Option<Rat>, f64), v: &(Option<Rat>, f64)| match (&u.0, &v.0) {
        (Some(a), Some(b)) => a == b,
        _ => (u.1 - v.1).abs() <= FLOAT_JOINT_TOL,
    };
    let zero = (Some(Rat::zero()), 0.0);
    let one = (Some(Rat::one()), 1.0);
    let start = point(0, false);
    if !equal(&start, &zero) {
        failed.push(JointFailure { index: 0, left: describe(&start), right: "0".into() });
    }
    for i in 1..n {
        let l = point(i - 1, true);
        let r = point(i, false);
        if !equal(&l, &r) {
            failed.push(JointFailure { index: i, left: describe(&l), right: describe(&r) });
        }
    }
    let end = point(n - 1, true);
    if !equal(&end, &one) {
        failed.push(JointFailure { index: n, left: describe(&end), right: "1".into() });
    }
    let weakly_contractive: Vec<bool> = sys.maps.iter().map(|m| m.is_weakly_contractive()).collect();
    let compatible = failed.is_empty();
    let d_system = compatible && weakly_contractive.iter().all(|&w| w);
    SysReport { n, failed_joints: failed, weakly_contractive, compatible, d_system }
}

/// Per-map flags of the linear-fractional conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct LfMapFlags {
    /// `c + d > 0` and `d > 0`.
    pub well_defined: bool,
    /// `0 < ad - bc <= min(d², (c+d)²)`.
    pub weak_contractive: bool,
    /// `0 < ad - bc < min(d², (c+d)²)`.
    pub strictly_contractive: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LfReport {
    pub maps: Vec<LfMapFlags>,
    /// `b_0 = 0`.
    pub starts_at_zero: bool,
    /// `(a_i + b_i)/(c_i + d_i) = b_{i+1}/d_{i+1}` with `b_N/d_N := 1`, per `i`.
    pub joints: Vec<bool>,
    pub compatible: bool,
}

impl LfReport {
    /// Name of the first violated condition, scanning maps in order.
    pub fn first_violation(&self) -> Option<String> {
        for (i, m) in self.maps.iter().enumerate() {
            if !m.well_defined {
                return Some(format!("map {i}: well-definedness (d > 0, c + d > 0)"));
            }
            if !m.weak_contractive {
                return Some(format!("map {i}: 0 < ad - bc <= min(d^2, (c+d)^2)"));
            }
        }
        if !self.starts_at_zero {
            return Some("compatibility: b_0 = 0".into());
        }
        if let Some(i) = self.joints.iter().position(|ok| !ok) {
            return Some(format!("compatibility: joint after map {i}"));
        }
        None
    }

    pub fn check(&self) -> Result<()> {
        match self.first_violation() {
            Some(v) => Err(Error::Condition(v)),
            None => Ok(()),
        }
    }

    pub fn all_strict(&self) -> bool {
        self.maps.iter().all(|m| m.strictly_contractive)
    }
}

/// Checks the linear-fractional conditions on raw `(a, b, c, d)` tuples, exactly.
pub fn validate_lf_system(coeffs: &[(Rat, Rat, Rat, Rat)]) -> LfReport {
    let flags: Vec<LfMapFlags> = coeffs
        .iter()
        .map(|(a, b, c, d)| {
            let well_defined = d.is_positive() && (c + d).is_positive();
            let det = a * d - b * c;
            let m = if c.is_negative() { c + d } else { d.clone() };
            let bound = &m * &m;
            let weak = well_defined && det.is_positive() && det <= bound;
            let strict = well_defined && det.is_positive() && det < bound;
            LfMapFlags { well_defined, weak_contractive: weak, strictly_contractive: strict }
        })
        .collect();
    let starts_at_zero = coeffs.first().map(|(_, b, _, d)| !d.is_zero() && b.is_zero()).unwrap_or(false);
    let n = coeffs.len();
    let joints: Vec<bool> = (0..n)
        .map(|i| {
            let (a, b, c, d) = &coeffs[i];
            if !flags[i].well_defined {
                return false;
            }
            let right = (a + b) / (c + d);
            if i + 1 == n {
                right == Rat::one()
            } else {
                let (_, b1, _, d1) = &coeffs[i + 1];
                !d1.is_zero() && right == b1 / d1
            }
        })
        .collect();
    let compatible = starts_at_zero && joints.iter().all(|&j| j);
    LfReport { maps: flags, starts_at_zero, joints, compatible }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, rat};

    fn r(n: i64) -> Rat {
        int(n)
    }

    fn mob(a: i64, b: i64, c: i64, d: i64) -> IntervalMap {
        IntervalMap::mobius(r(a), r(b), r(c), r(d)).unwrap()
    }

    fn example1() -> MapSystem {
        MapSystem::new(vec![mob(1, 0, -1, 6), mob(3, 1, -1, 5)]).unwrap()
    }

    #[test]
    fn lf_report_example_one() {
        let rep = validate_lf_system(&[(r(1), r(0), r(-1), r(6)), (r(3), r(1), r(-1), r(5))]);
        assert!(rep.compatible);
        assert!(rep.maps.iter().all(|m| m.well_defined && m.weak_contractive));
        assert!(rep.maps[0].strictly_contractive);
        assert!(!rep.maps[1].strictly_contractive);
        assert!(rep.check().is_ok());
    }

    #[test]
    fn lf_report_dyadic_and_bad_d() {
        let rep = validate_lf_system(&[(r(1), r(0), r(0), r(2)), (r(1), r(1), r(0), r(2))]);
        assert!(rep.compatible && rep.all_strict());
        let bad = validate_lf_system(&[(r(1), r(0), r(0), r(0)), (r(1), r(1), r(0), r(2))]);
        assert!(!bad.maps[0].well_defined);
        assert!(bad.first_violation().unwrap().contains("well-definedness"));
    }

    #[test]
    fn compatible_systems() {
        let ex2 = MapSystem::new(vec![mob(1, 0, -1, 8), IntervalMap::affine(rat(5, 7), rat(1, 7)).unwrap(), mob(0, 6, -1, 7)])
            .unwrap();
        let rep = ex2.validate();
        assert!(rep.compatible && rep.d_system, "{rep:?}");
        let dyadic = MapSystem::new(vec![
            IntervalMap::affine(rat(1, 2), r(0)).unwrap(),
            IntervalMap::affine(rat(1, 2), rat(1, 2)).unwrap(),
        ])
        .unwrap();
        assert!(dyadic.validate().d_system);
        let broken = MapSystem::new(vec![
            IntervalMap::affine(rat(1, 2), r(0)).unwrap(),
            IntervalMap::affine(rat(1, 3), rat(2, 3)).unwrap(),
        ])
        .unwrap();
        let rep = broken.validate();
        assert!(!rep.compatible);
        assert_eq!(rep.failed_joints.len(), 1);
        assert_eq!(rep.failed_joints[0].left, "1/2");
        assert_eq!(rep.failed_joints[0].right, "2/3");
        assert!(rep.check().is_err());
    }

    #[test]
    fn lists_every_failed_joint() {
        let sys = MapSystem::new(vec![
            IntervalMap::affine(rat(1, 4), rat(1, 8)).unwrap(),
            IntervalMap::affine(rat(1, 4), rat(1, 2)).unwrap(),
        ])
        .unwrap();
        let rep = sys.validate();
        let idx: Vec<usize> = rep.failed_joints.iter().map(|j| j.index).collect();
        assert_eq!(idx, vec![0, 1, 2]);
    }

    #[test]
    fn cylinders_example_one() {
        let g = example1();
        assert_eq!(g.cylinder(&[0]).unwrap(), Interval::Exact { lo: r(0), hi: rat(1, 5) });
        assert_eq!(g.cylinder(&[1, 1]).unwrap(), Interval::Exact { lo: rat(1, 3), hi: r(1) });
        for depth in 1..8 {
            let (lo, _) = g.cylinder(&vec![0; depth]).unwrap().exact().map(|(a, b)| (a.clone(), b.clone())).unwrap();
            assert_eq!(lo, r(0));
        }
        assert!(matches!(g.cylinder(&[2]), Err(Error::Symbol { symbol: 2, n: 2 })));
        assert!(g.cylinder(&[]).is_err());
    }

    #[test]
    fn float_cylinders_carry_error() {
        let f = MapSystem::new(vec![IntervalMap::quad(0.8, 0.0, 0.05).unwrap(), IntervalMap::quad(0.2, 0.8, 0.0).unwrap()])
            .unwrap();
        assert!(f.validate().d_system);
        match f.cylinder(&[0, 1]).unwrap() {
            Interval::Float { lo, hi, err } => {
                assert!(lo < hi && err > 0.0 && err < 1e-14);
                assert!((lo - f.map(0).apply_f64(0.8)).abs() < 1e-15);
            }
            other => panic!("expected float interval, got {other}"),
        }
    }
}

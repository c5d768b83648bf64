//! State space `Y = [α, β]`, transition weights `G_i`, state updates `H_i`,
//! their fixed points and the induced probability vectors.
//!
//! Everything is computed from the `d = 1` representative of each map
//! `g_i(x) = (a_i x + b_i)/(c_i x + 1)`. With `b_N := 1` the weights telescope,
//! `G_i = F(b_{i+1}; ·) − F(b_i; ·)` where `F(b; y) = b(y+1)/(by+1)`, and each
//! `F(b; ·)` is non-decreasing on `Y`.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact_maps::{MapSystem, MobiusMap};
use crate::rat::{format_rat, to_f64, Rat, Surd};

/// A point of the extended state space: finite (possibly a quadratic surd) or `+∞`.
#[derive(Clone, Debug, PartialEq)]
pub enum YPoint {
    Finite(Surd),
    PosInf,
}

impl YPoint {
    pub fn rat(x: Rat) -> Self {
        YPoint::Finite(Surd::from_rat(x))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            YPoint::Finite(s) => s.to_f64(),
            YPoint::PosInf => f64::INFINITY,
        }
    }

    pub fn as_rat(&self) -> Option<&Rat> {
        match self {
            YPoint::Finite(s) => s.as_rat(),
            YPoint::PosInf => None,
        }
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, YPoint::PosInf)
    }

    pub fn cmp_point(&self, other: &YPoint) -> Ordering {
        match (self, other) {
            (YPoint::PosInf, YPoint::PosInf) => Ordering::Equal,
            (YPoint::PosInf, _) => Ordering::Greater,
            (_, YPoint::PosInf) => Ordering::Less,
            (YPoint::Finite(a), YPoint::Finite(b)) => a.cmp_surd(b),
        }
    }
}

impl fmt::Display for YPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            YPoint::Finite(s) => write!(f, "{s}"),
            YPoint::PosInf => write!(f, "+inf"),
        }
    }
}

/// Compact coordinate used for searches over `Y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    Identity,
    /// `t = y/(2+y)`: sends `[-1, +∞]` onto `[-1, 1]`.
    Compactified,
}

impl Chart {
    pub fn to_chart(self, y: f64) -> f64 {
        match self {
            Chart::Identity => y,
            Chart::Compactified if y == f64::INFINITY => 1.0,
            Chart::Compactified => y / (2.0 + y),
        }
    }

    pub fn from_chart(self, t: f64) -> f64 {
        match self {
            Chart::Identity => t,
            Chart::Compactified if t >= 1.0 => f64::INFINITY,
            Chart::Compactified => 2.0 * t / (1.0 - t),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct YDomain {
    pub alpha: YPoint,
    pub beta: YPoint,
    pub chart: Chart,
}

impl YDomain {
    pub fn alpha_f64(&self) -> f64 {
        self.alpha.to_f64()
    }

    pub fn beta_f64(&self) -> f64 {
        self.beta.to_f64()
    }

    pub fn is_point(&self) -> bool {
        self.alpha.cmp_point(&self.beta) == Ordering::Equal
    }

    /// Chart image of `Y`.
    pub fn chart_bounds(&self) -> (f64, f64) {
        (self.chart.to_chart(self.alpha_f64()), self.chart.to_chart(self.beta_f64()))
    }

    pub fn contains_f64(&self, y: f64, tol: f64) -> bool {
        y >= self.alpha_f64() - tol && y <= self.beta_f64() + tol
    }

    pub fn contains_rat(&self, y: &Rat) -> bool {
        let p = YPoint::rat(y.clone());
        self.alpha.cmp_point(&p) != Ordering::Greater && p.cmp_point(&self.beta) != Ordering::Greater
    }
}

/// Which endpoint degeneracies occur; the variants mirror the four shapes of `Y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseTag {
    /// `a_0 < 1`, `b_{N-1} + c_{N-1} > 0`: `-1 < α ≤ β < +∞`.
    Case1,
    /// `a_0 = 1`, `b_{N-1} + c_{N-1} > 0`: `α > -1`, `β = +∞`.
    Case2_1,
    /// `a_0 < 1`, `b_{N-1} + c_{N-1} = 0`: `α = -1`, `β < +∞`.
    Case2_2,
    /// `a_0 = 1`, `b_{N-1} + c_{N-1} = 0`: `α = -1`, `β = +∞`.
    Case2_3,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseTag::Case1 => "Case 1",
            CaseTag::Case2_1 => "Case 2.1",
            CaseTag::Case2_2 => "Case 2.2",
            CaseTag::Case2_3 => "Case 2.3",
        })
    }
}

/// A probability vector known exactly when its defining point is rational.
#[derive(Clone, Debug, PartialEq)]
pub struct PVec {
    pub exact: Option<Vec<Rat>>,
    pub approx: Vec<f64>,
}

impl PVec {
    pub fn from_exact(v: Vec<Rat>) -> Self {
        let approx = v.iter().map(to_f64).collect();
        PVec { exact: Some(v), approx }
    }

    pub fn same_as(&self, other: &PVec) -> bool {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => a == b,
            _ => self.approx.iter().zip(&other.approx).all(|(x, y)| (x - y).abs() <= 1e-12),
        }
    }
}

impl fmt::Display for PVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = match &self.exact {
            Some(v) => v.iter().map(format_rat).collect(),
            None => self.approx.iter().map(|x| format!("{x:.12}")).collect(),
        };
        write!(f, "({})", parts.join(", "))
    }
}

/// `b(y+1)/(by+1)`, with `F(1; ·) ≡ 1`.
fn f_rat(b: &Rat, y: &Rat) -> Rat {
    if b.is_one() {
        return Rat::one();
    }
    b * (y + Rat::one()) / (b * y + Rat::one())
}

fn f_f64(b: f64, b_is_one: bool, y: f64) -> f64 {
    if b_is_one {
        1.0
    } else if y == f64::INFINITY {
        if b > 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        b * (y + 1.0) / (b * y + 1.0)
    }
}

/// Unit-`d` coefficients of an exact system.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitCoeffs {
    pub a: Vec<Rat>,
    pub b: Vec<Rat>,
    pub c: Vec<Rat>,
}

impl UnitCoeffs {
    pub fn from_system(g: &MapSystem) -> Result<Self> {
        let ms = g.mobius_maps().ok_or(Error::NotExact)?;
        let us: Vec<MobiusMap> = ms.iter().map(|m| m.unit_d()).collect();
        Ok(UnitCoeffs {
            a: us.iter().map(|m| m.a.clone()).collect(),
            b: us.iter().map(|m| m.b.clone()).collect(),
            c: us.iter().map(|m| m.c.clone()).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }
}

/// `H_i(y) = (a_i y + c_i)/(b_i y + 1)` as a coefficient record.
pub fn h_map(u: &UnitCoeffs, i: usize) -> MobiusMap {
    MobiusMap::new_unchecked(u.a[i].clone(), u.c[i].clone(), u.b[i].clone(), Rat::one())
}

/// Fixed point of `H_i` on the extended line.
fn fixed_point(u: &UnitCoeffs, i: usize) -> (YPoint, bool) {
    let (a, b, c) = (&u.a[i], &u.b[i], &u.c[i]);
    let one = Rat::one();
    if i == 0 || b.is_zero() {
        // Affine H_i: y = a y + c.
        if a.is_one() {
            return (YPoint::PosInf, i != 0);
        }
        return (YPoint::rat(c / (&one - a)), i != 0);
    }
    let two_b = Rat::from_integer(2.into()) * b;
    let disc = (&one - a) * (&one - a) + Rat::from_integer(4.into()) * b * c;
    (YPoint::Finite(Surd::new((a - &one) / &two_b, &one / &two_b, disc)), false)
}

/// `Y = [α, β]` with the chart used for searches.
pub fn compute_y(g: &MapSystem) -> Result<YDomain> {
    let u = UnitCoeffs::from_system(g)?;
    Ok(domain_from(&u))
}

fn domain_from(u: &UnitCoeffs) -> YDomain {
    let mut alpha = YPoint::rat(Rat::zero());
    let mut beta = YPoint::rat(Rat::zero());
    for i in 0..u.n() {
        let (p, _) = fixed_point(u, i);
        if i == 0 && p.is_inf() {
            beta = YPoint::PosInf;
            continue;
        }
        if p.cmp_point(&alpha) == Ordering::Less {
            alpha = p.clone();
        }
        if p.cmp_point(&beta) == Ordering::Greater {
            beta = p;
        }
    }
    let chart = if beta.is_inf() { Chart::Compactified } else { Chart::Identity };
    YDomain { alpha, beta, chart }
}

pub fn classify_case(g: &MapSystem) -> Result<CaseTag> {
    let u = UnitCoeffs::from_system(g)?;
    Ok(case_from(&u))
}

fn case_from(u: &UnitCoeffs) -> CaseTag {
    let last = u.n() - 1;
    let a0_one = u.a[0].is_one();
    let edge = (&u.b[last] + &u.c[last]).is_zero();
    match (a0_one, edge) {
        (false, false) => CaseTag::Case1,
        (true, false) => CaseTag::Case2_1,
        (false, true) => CaseTag::Case2_2,
        (true, true) => CaseTag::Case2_3,
    }
}

/// Infimum and supremum of a function over `Y`, exact where the extremal point is rational.
#[derive(Clone, Debug, PartialEq)]
pub struct Extremes {
    pub inf: f64,
    pub sup: f64,
    pub inf_exact: Option<Rat>,
    pub sup_exact: Option<Rat>,
}

#[derive(Clone, Debug)]
pub struct SpectralData {
    pub n: usize,
    pub coeffs: UnitCoeffs,
    /// `b_0, …, b_{N-1}, b_N = 1`.
    pub b_ext: Vec<Rat>,
    pub domain: YDomain,
    pub h: Vec<MobiusMap>,
    pub fix_h: Vec<YPoint>,
    pub pvec: Vec<PVec>,
    pub case_tag: CaseTag,
    /// Indices `i >= 1` with `b_i = 0`, where the affine fixed point was used.
    pub degenerate_roots: Vec<usize>,
    b_f64: Vec<f64>,
    h_f64: Vec<[f64; 3]>,
}

impl SpectralData {
    pub fn new(g: &MapSystem) -> Result<Self> {
        let coeffs = UnitCoeffs::from_system(g)?;
        let n = coeffs.n();
        let mut b_ext = coeffs.b.clone();
        b_ext.push(Rat::one());
        let domain = domain_from(&coeffs);
        let h: Vec<MobiusMap> = (0..n).map(|i| h_map(&coeffs, i)).collect();
        let mut fix_h = Vec::with_capacity(n);
        let mut degenerate_roots = Vec::new();
        for i in 0..n {
            let (p, degenerate) = fixed_point(&coeffs, i);
            if degenerate {
                degenerate_roots.push(i);
            }
            fix_h.push(p);
        }
        let case_tag = case_from(&coeffs);
        let b_f64 = b_ext.iter().map(to_f64).collect();
        let h_f64 = (0..n).map(|i| [to_f64(&coeffs.a[i]), to_f64(&coeffs.c[i]), to_f64(&coeffs.b[i])]).collect();
        let mut sd = SpectralData {
            n,
            coeffs,
            b_ext,
            domain,
            h,
            fix_h,
            pvec: Vec::new(),
            case_tag,
            degenerate_roots,
            b_f64,
            h_f64,
        };
        sd.pvec = sd.fix_h.iter().map(|p| sd.g_at_point(p)).collect();
        Ok(sd)
    }

    /// `G_i(y)` exactly.
    pub fn g_rat(&self, i: usize, y: &Rat) -> Rat {
        f_rat(&self.b_ext[i + 1], y) - f_rat(&self.b_ext[i], y)
    }

    pub fn g_vec_rat(&self, y: &Rat) -> Vec<Rat> {
        (0..self.n).map(|i| self.g_rat(i, y)).collect()
    }

    /// `F(b_k; y)` for `0 <= k <= N`; `y = +∞` gives the limit.
    pub fn f_f64(&self, k: usize, y: f64) -> f64 {
        f_f64(self.b_f64[k], k == self.n || self.b_ext[k].is_one(), y)
    }

    /// `G_i(y)`; `y = +∞` gives the limit.
    pub fn g_f64(&self, i: usize, y: f64) -> f64 {
        self.f_f64(i + 1, y) - self.f_f64(i, y)
    }

    pub fn g_vec_f64(&self, y: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n);
        self.g_into(y, &mut out);
        out
    }

    pub fn g_into(&self, y: f64, out: &mut Vec<f64>) {
        out.clear();
        let mut prev = self.f_f64(0, y);
        for k in 1..=self.n {
            let cur = self.f_f64(k, y);
            out.push(cur - prev);
            prev = cur;
        }
    }

    /// Enclosure of `G_i` over `[y1, y2]` from the monotonicity of each `F(b_k; ·)`.
    pub fn g_enclosure(&self, i: usize, y1: f64, y2: f64) -> (f64, f64) {
        let lo = self.f_f64(i + 1, y1) - self.f_f64(i, y2);
        let hi = self.f_f64(i + 1, y2) - self.f_f64(i, y1);
        (lo.max(0.0), hi.min(1.0))
    }

    pub fn h_rat(&self, i: usize, y: &Rat) -> Rat {
        self.h[i].apply(y)
    }

    /// `H_i(y)`; `y = +∞` gives the limit.
    pub fn h_f64(&self, i: usize, y: f64) -> f64 {
        let [a, c, b] = self.h_f64[i];
        if y == f64::INFINITY {
            return if b == 0.0 { f64::INFINITY } else { a / b };
        }
        (a * y + c) / (b * y + 1.0)
    }

    fn g_at_point(&self, p: &YPoint) -> PVec {
        match p {
            YPoint::PosInf => {
                let mut v = vec![Rat::zero(); self.n];
                v[0] = Rat::one();
                PVec::from_exact(v)
            }
            YPoint::Finite(s) => match s.as_rat() {
                Some(y) => PVec::from_exact(self.g_vec_rat(y)),
                None => PVec { exact: None, approx: self.g_vec_f64(s.to_f64()) },
            },
        }
    }

    /// Distinct vectors among `𝔭_0, …, 𝔭_{N-1}`, in first-occurrence order.
    pub fn distinct_p(&self) -> Vec<PVec> {
        let mut out: Vec<PVec> = Vec::new();
        for p in &self.pvec {
            if !out.iter().any(|q| q.same_as(p)) {
                out.push(p.clone());
            }
        }
        out
    }

    /// Extremes over `Y` of `F(b_hi; ·) − F(b_lo; ·)` for `lo < hi` in `0..=N`.
    /// These functions rise then fall, with the only critical point at
    /// `y* = −1 + sqrt((1−b)(1−b′)/(b b′))`.
    fn run_extremes(&self, lo: usize, hi: usize) -> Extremes {
        let (b, bp) = (&self.b_ext[lo], &self.b_ext[hi]);
        let mut points = vec![self.domain.alpha.clone(), self.domain.beta.clone()];
        let one = Rat::one();
        if b.is_positive() && !bp.is_one() {
            let rad = (&one - b) * (&one - bp) / (b * bp);
            let crit = YPoint::Finite(Surd::new(-one.clone(), one.clone(), rad));
            if self.domain.alpha.cmp_point(&crit) == Ordering::Less && crit.cmp_point(&self.domain.beta) == Ordering::Less {
                points.push(crit);
            }
        }
        let eval = |p: &YPoint| -> (f64, Option<Rat>) {
            match p.as_rat() {
                Some(y) => {
                    let v = f_rat(bp, y) - f_rat(b, y);
                    (to_f64(&v), Some(v))
                }
                None => {
                    let y = p.to_f64();
                    (self.f_f64(hi, y) - self.f_f64(lo, y), None)
                }
            }
        };
        let vals: Vec<(f64, Option<Rat>)> = points.iter().map(eval).collect();
        let lo_v = vals.iter().min_by(|x, y| x.0.total_cmp(&y.0)).unwrap().clone();
        let hi_v = vals.iter().max_by(|x, y| x.0.total_cmp(&y.0)).unwrap().clone();
        Extremes { inf: lo_v.0, sup: hi_v.0, inf_exact: lo_v.1, sup_exact: hi_v.1 }
    }

    /// Per-symbol infimum and supremum of `G_i` over `Y`.
    pub fn g_extremes(&self, i: usize) -> Extremes {
        self.run_extremes(i, i + 1)
    }

    /// `inf_{y ∈ Y} Σ_{i ∈ I} G_i(y)`.
    ///
    /// Exact analysis when `I` or its complement is a contiguous block of
    /// symbols; otherwise a chart grid search (reported as not exact).
    pub fn inf_sum_g(&self, set: &[usize]) -> Result<Extremes> {
        if let Some(&bad) = set.iter().find(|&&i| i >= self.n) {
            return Err(Error::Symbol { symbol: bad, n: self.n });
        }
        let mut mask = vec![false; self.n];
        for &i in set {
            mask[i] = true;
        }
        let members: Vec<usize> = (0..self.n).filter(|&i| mask[i]).collect();
        let others: Vec<usize> = (0..self.n).filter(|&i| !mask[i]).collect();
        if others.is_empty() {
            return Ok(Extremes { inf: 1.0, sup: 1.0, inf_exact: Some(Rat::one()), sup_exact: Some(Rat::one()) });
        }
        if members.is_empty() {
            return Ok(Extremes { inf: 0.0, sup: 0.0, inf_exact: Some(Rat::zero()), sup_exact: Some(Rat::zero()) });
        }
        let contiguous = |v: &[usize]| v.windows(2).all(|w| w[1] == w[0] + 1);
        if contiguous(&members) {
            return Ok(self.run_extremes(members[0], members[members.len() - 1] + 1));
        }
        if contiguous(&others) {
            let e = self.run_extremes(others[0], others[others.len() - 1] + 1);
            let flip = |x: Option<Rat>| x.map(|v| Rat::one() - v);
            return Ok(Extremes { inf: 1.0 - e.sup, sup: 1.0 - e.inf, inf_exact: flip(e.sup_exact), sup_exact: flip(e.inf_exact) });
        }
        let (t0, t1) = self.domain.chart_bounds();
        let steps = 20_000;
        let mut inf = f64::INFINITY;
        let mut sup = f64::NEG_INFINITY;
        for k in 0..=steps {
            let y = self.domain.chart.from_chart(t0 + (t1 - t0) * k as f64 / steps as f64);
            let v: f64 = members.iter().map(|&i| self.g_f64(i, y)).sum();
            inf = inf.min(v);
            sup = sup.max(v);
        }
        Ok(Extremes { inf, sup, inf_exact: None, sup_exact: None })
    }

    /// `c̃ = inf_{y, i} G_i(y)`.
    pub fn min_g(&self) -> f64 {
        (0..self.n).map(|i| self.g_extremes(i).inf).fold(f64::INFINITY, f64::min)
    }
}

/// `G_i`, `H_i` data together with the domain; alias for [`SpectralData::new`].
pub fn compute_gh(g: &MapSystem) -> Result<SpectralData> {
    SpectralData::new(g)
}

/// Fixed points of each `H_i` and the vectors `𝔭_i = G(Fix(H_i))`.
pub fn fixed_points_and_p(g: &MapSystem) -> Result<(Vec<YPoint>, Vec<PVec>)> {
    let sd = SpectralData::new(g)?;
    Ok((sd.fix_h, sd.pvec))
}

pub fn inf_sum_g(g: &MapSystem, set: &[usize]) -> Result<Extremes> {
    SpectralData::new(g)?.inf_sum_g(set)
}

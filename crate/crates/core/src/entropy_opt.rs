//! Relative entropy on the simplex and the optimization quantities built on it:
//! `V(q; ε)`, `V(ε)`, the separation witnesses `W_i(q, y)`, the coloring map,
//! and region-restricted entropy suprema.
//!
//! Natural logarithms throughout.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::rat::{to_f64, Rat};
use crate::spectral_y::SpectralData;

/// Tolerance on `Σ p_i = 1` for float vectors.
pub const SUM_TOL: f64 = 1e-12;

/// A point of the closed simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if v.len() < 2 {
            return Err(Error::Domain { value: format!("{v:?} (need at least two components)") });
        }
        if v.iter().any(|x| !x.is_finite() || *x < -SUM_TOL) {
            return Err(Error::Domain { value: format!("{v:?} (negative or non-finite component)") });
        }
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::Domain { value: format!("{v:?} (sums to {s})") });
        }
        Ok(ProbVector(v.into_iter().map(|x| x.max(0.0)).collect()))
    }

    pub fn from_rats(v: &[Rat]) -> Result<Self> {
        let s: Rat = v.iter().sum();
        if s != Rat::from_integer(1.into()) {
            return Err(Error::Domain { value: "rational vector does not sum to 1".into() });
        }
        ProbVector::new(v.iter().map(to_f64).collect())
    }

    pub fn uniform(n: usize) -> Self {
        ProbVector(vec![1.0 / n as f64; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Membership in the open simplex (all components positive).
    pub fn is_positive(&self) -> bool {
        self.0.iter().all(|&x| x > 0.0)
    }

    /// Membership in `{p : p_i >= eps}`.
    pub fn in_interior(&self, eps: f64) -> bool {
        self.0.iter().all(|&x| x >= eps - SUM_TOL)
    }
}

impl Deref for ProbVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn l1(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

pub fn linf(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// `s_N(p|q) = Σ p_i log(q_i/p_i)`, with `0 log(q/0) = 0`; `-∞` when some
/// `p_i > 0` meets `q_i = 0`.
pub fn rel_entropy(p: &[f64], q: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::NEG_INFINITY;
            }
            s += pi * (qi / pi).ln();
        }
    }
    s.min(0.0)
}

/// A closed subset of the simplex.
#[derive(Clone, Debug, PartialEq)]
pub enum RegionSpec {
    Full,
    /// `{q : q_i >= eps}`.
    Interior { eps: f64 },
    /// `{q : ‖q − center‖₁ >= radius}`.
    BallComplement { center: Vec<f64>, radius: f64 },
    /// `{q : lo_i <= q_i <= hi_i}`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Intersection(Vec<RegionSpec>),
}

impl RegionSpec {
    /// Box with the listed coordinates constrained and the rest in `[0, 1]`.
    pub fn boxed(n: usize, constraints: &[(usize, f64, f64)]) -> Self {
        let mut lo = vec![0.0; n];
        let mut hi = vec![1.0; n];
        for &(k, a, b) in constraints {
            lo[k] = a;
            hi[k] = b;
        }
        RegionSpec::Box { lo, hi }
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        self.contains_relaxed(q, 1e-12)
    }

    /// Membership with every constraint loosened by `h` per coordinate
    /// (`N h` for the L1 constraint).
    pub fn contains_relaxed(&self, q: &[f64], h: f64) -> bool {
        match self {
            RegionSpec::Full => true,
            RegionSpec::Interior { eps } => q.iter().all(|&x| x >= eps - h),
            RegionSpec::BallComplement { center, radius } => l1(q, center) >= radius - q.len() as f64 * h,
            RegionSpec::Box { lo, hi } => q.iter().zip(lo.iter().zip(hi)).all(|(&x, (&a, &b))| x >= a - h && x <= b + h),
            RegionSpec::Intersection(parts) => parts.iter().all(|r| r.contains_relaxed(q, h)),
        }
    }

    /// Coordinate bounds when the region is a box intersected with the simplex.
    pub fn box_bounds(&self, n: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut lo = vec![0.0f64; n];
        let mut hi = vec![1.0f64; n];
        self.tighten(&mut lo, &mut hi)?;
        Some((lo, hi))
    }

    fn tighten(&self, lo: &mut [f64], hi: &mut [f64]) -> Option<()> {
        match self {
            RegionSpec::Full => {}
            RegionSpec::Interior { eps } => lo.iter_mut().for_each(|x| *x = x.max(*eps)),
            RegionSpec::BallComplement { .. } => return None,
            RegionSpec::Box { lo: a, hi: b } => {
                for k in 0..lo.len() {
                    lo[k] = lo[k].max(a[k]);
                    hi[k] = hi[k].min(b[k]);
                }
            }
            RegionSpec::Intersection(parts) => {
                for p in parts {
                    p.tighten(lo, hi)?;
                }
            }
        }
        Some(())
    }
}

/// All points of the simplex with coordinates in `{0, 1/m, …, 1}`.
pub fn simplex_grid(n: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, m: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(cur.iter().map(|&k| k as f64 / m as f64).collect());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n, m, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, m, m, &mut Vec::with_capacity(n), &mut out);
    out
}

/// `V(q; ε)` over the whole simplex in closed form.
///
/// With `e = ε/2` the optimum moves mass `e` proportionally onto a subset `P`
/// of coordinates and off its complement `M`, giving
/// `(Q_P + e) log(Q_P/(Q_P+e)) + (Q_M − e) log(Q_M/(Q_M−e))`, maximized over `P`.
pub fn v_full(q: &[f64], eps: f64) -> Result<f64> {
    let n = q.len();
    let min_q = q.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(eps > 0.0) || eps > 2.0 * (1.0 - min_q) + 1e-12 {
        return Err(Error::Infeasible(format!("no p in the simplex at L1 distance {eps} from q")));
    }
    let e = eps / 2.0;
    let mut best = f64::NEG_INFINITY;
    for mask in 1u32..(1u32 << n) - 1 {
        let qp: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| q[k]).sum();
        let qm: f64 = (0..n).filter(|k| mask >> k & 1 == 0).map(|k| q[k]).sum();
        if qp <= 0.0 || qm < e - 1e-15 {
            continue;
        }
        best = best.max(two_block(qp, e));
    }
    Ok(best)
}

fn two_block(qp: f64, e: f64) -> f64 {
    let qm = 1.0 - qp;
    let down = if qm - e <= 0.0 { 0.0 } else { (qm - e) * (qm / (qm - e)).ln() };
    (qp + e) * (qp / (qp + e)).ln() + down
}

/// `V(ε) = max_q V(q; ε)`.
///
/// `V(q; ε)` only sees `q` through the block mass `Q_P`, so the outer maximum is
/// a one-dimensional search over `Q ∈ (0, 1 − ε/2]`, done on a grid with
/// golden-section refinement.
pub fn v_global(eps: f64) -> f64 {
    let e = eps / 2.0;
    if !(e > 0.0) || e >= 1.0 {
        return f64::NEG_INFINITY;
    }
    let top = 1.0 - e;
    let steps = 2000;
    let (mut best, mut arg) = (f64::NEG_INFINITY, top);
    for k in 1..=steps {
        let x = top * k as f64 / steps as f64;
        let v = two_block(x, e);
        if v > best {
            best = v;
            arg = x;
        }
    }
    let cell = top / steps as f64;
    let (mut a, mut b) = ((arg - cell).max(cell * 1e-6), (arg + cell).min(top));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if two_block(c, e) >= two_block(d, e) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(two_block(0.5 * (a + b), e))
}

/// `V(q; ε)` with `p` restricted to `region`.
///
/// For a box region every sign pattern `σ` of `p − q` gives a concave problem
/// solved through its dual: `p_i = clip(q_i u e^{μ σ_i})`, with `u` fixing the
/// total mass and `μ >= 0` the L1 constraint.
pub fn v_of(q: &[f64], eps: f64, region: &RegionSpec) -> Result<f64> {
    if matches!(region, RegionSpec::Full) {
        return v_full(q, eps);
    }
    let (lo, hi) = region
        .box_bounds(q.len())
        .ok_or_else(|| Error::Infeasible("V(q; eps) needs a box-shaped region for p".into()))?;
    v_box(q, eps, &lo, &hi)
}

fn v_box(q: &[f64], eps: f64, lo: &[f64], hi: &[f64]) -> Result<f64> {
    let n = q.len();
    let mut best = f64::NEG_INFINITY;
    let mut feasible = false;
    for mask in 1u32..(1u32 << n) - 1 {
        let sigma: Vec<f64> = (0..n).map(|k| if mask >> k & 1 == 1 { 1.0 } else { -1.0 }).collect();
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut empty = false;
        for k in 0..n {
            let (x, y) = if sigma[k] > 0.0 { (lo[k].max(q[k]), hi[k]) } else { (lo[k], hi[k].min(q[k])) };
            if x > y + 1e-15 {
                empty = true;
            }
            a[k] = x;
            b[k] = y.max(x);
        }
        if empty {
            continue;
        }
        let base: f64 = a.iter().sum();
        let cap: f64 = b.iter().sum();
        if base > 1.0 + 1e-12 || cap < 1.0 - 1e-12 {
            continue;
        }
        let lp = lp_extreme(&a, &b, &sigma);
        let d_max = dev(&lp, q, &sigma);
        if d_max < eps - 1e-12 {
            continue;
        }
        feasible = true;
        let p = dual_solution(q, &a, &b, &sigma, eps).unwrap_or(lp);
        best = best.max(rel_entropy(&p, q));
    }
    if feasible {
        Ok(best)
    } else {
        Err(Error::Infeasible(format!("no p in the region at L1 distance {eps} from q")))
    }
}

fn dev(p: &[f64], q: &[f64], sigma: &[f64]) -> f64 {
    p.iter().zip(q).zip(sigma).map(|((p, q), s)| s * (p - q)).sum()
}

/// Maximizer of `Σ σ_i p_i` over the box with `Σ p = 1`.
fn lp_extreme(a: &[f64], b: &[f64], sigma: &[f64]) -> Vec<f64> {
    let mut p = a.to_vec();
    let mut rem = 1.0 - a.iter().sum::<f64>();
    for pass in [1.0, -1.0] {
        for k in 0..p.len() {
            if sigma[k] == pass && rem > 0.0 {
                let add = rem.min(b[k] - a[k]);
                p[k] += add;
                rem -= add;
            }
        }
    }
    p
}

fn dual_point(q: &[f64], a: &[f64], b: &[f64], sigma: &[f64], mu: f64) -> Vec<f64> {
    let eval = |lnu: f64| -> Vec<f64> {
        (0..q.len())
            .map(|k| {
                if q[k] <= 0.0 {
                    a[k]
                } else {
                    (q[k].ln() + lnu + mu * sigma[k]).exp().clamp(a[k], b[k])
                }
            })
            .collect()
    };
    let (mut l, mut h) = (-mu - 1500.0, mu + 1500.0);
    for _ in 0..200 {
        let mid = 0.5 * (l + h);
        if eval(mid).iter().sum::<f64>() < 1.0 {
            l = mid;
        } else {
            h = mid;
        }
    }
    eval(h)
}

fn dual_solution(q: &[f64], a: &[f64], b: &[f64], sigma: &[f64], eps: f64) -> Option<Vec<f64>> {
    let d = |mu: f64| dev(&dual_point(q, a, b, sigma, mu), q, sigma);
    if d(0.0) >= eps {
        return Some(dual_point(q, a, b, sigma, 0.0));
    }
    let mut hi = 1.0;
    while d(hi) < eps {
        hi *= 2.0;
        if hi > 1e4 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if d(mid) < eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(dual_point(q, a, b, sigma, hi))
}

/// Certified upper bound for `max_{q ∈ region} V(q; ε)` on a grid of step `1/m`.
///
/// Every `q` has a grid point `g` with `‖g − q‖₁ <= h = N/m`, and
/// `V(q; ε) <= V(g; ε − h)`, so the bound is the grid maximum at `ε − h`.
pub fn v_max_over_region(n: usize, eps: f64, region: &RegionSpec, m: usize, exec: Execution) -> Result<f64> {
    let h = n as f64 / m as f64;
    if eps - h <= 0.0 {
        return Ok(0.0);
    }
    let grid: Vec<Vec<f64>> = simplex_grid(n, m).into_iter().filter(|g| region.contains_relaxed(g, 1.0 / m as f64)).collect();
    if grid.is_empty() {
        return Err(Error::Infeasible("region contains no grid point".into()));
    }
    let vals = par::map_slice(exec, &grid, |g| v_full(g, eps - h).unwrap_or(f64::NEG_INFINITY));
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max).min(0.0))
}

/// `W_i(q, y) = max(max_k |G_k(y) − q_k|, max_k |G_k(H_i(y)) − q_k|)`.
pub fn w_of(sd: &SpectralData, i: usize, q: &[f64], y: f64) -> f64 {
    let g0 = sd.g_vec_f64(y);
    let g1 = sd.g_vec_f64(sd.h_f64(i, y));
    linf(&g0, q).max(linf(&g1, q))
}

/// Bracket for `inf_{y ∈ Y} W_i(q, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WInf {
    /// Certified lower bound from interval enclosures on chart cells.
    pub lower: f64,
    /// Best value found at a sample point.
    pub upper: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    lb: f64,
    t1: f64,
    t2: f64,
}

impl PartialEq for Cell {
    fn eq(&self, o: &Self) -> bool {
        self.lb.total_cmp(&o.lb) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cell {
    fn cmp(&self, o: &Self) -> Ordering {
        o.lb.total_cmp(&self.lb)
    }
}

fn gap(x: f64, (a, b): (f64, f64)) -> f64 {
    if x < a {
        a - x
    } else if x > b {
        x - b
    } else {
        0.0
    }
}

fn w_cell_lower(sd: &SpectralData, i: usize, q: &[f64], t1: f64, t2: f64) -> f64 {
    let chart = sd.domain.chart;
    let (y1, y2) = (chart.from_chart(t1), chart.from_chart(t2));
    let (h1, h2) = (sd.h_f64(i, y1), sd.h_f64(i, y2));
    let mut lb = 0.0f64;
    for (k, &qk) in q.iter().enumerate() {
        lb = lb.max(gap(qk, sd.g_enclosure(k, y1, y2)));
        lb = lb.max(gap(qk, sd.g_enclosure(k, h1.min(h2), h1.max(h2))));
    }
    (lb - 4.0 * f64::EPSILON).max(0.0)
}

pub const W_INITIAL_CELLS: usize = 512;
pub const W_BRACKET_TOL: f64 = 1e-9;

/// `inf_{y ∈ Y} W_i(q, y)` by branch and bound over chart cells.
pub fn inf_w(sd: &SpectralData, i: usize, q: &[f64]) -> WInf {
    let chart = sd.domain.chart;
    let (t0, t1) = sd.domain.chart_bounds();
    let at = |t: f64| w_of(sd, i, q, chart.from_chart(t));
    if sd.domain.is_point() || t1 <= t0 {
        let w = at(t0);
        return WInf { lower: w, upper: w, y: chart.from_chart(t0) };
    }
    let mut best = (at(t0), t0);
    let e1 = at(t1);
    if e1 < best.0 {
        best = (e1, t1);
    }
    let mut heap = BinaryHeap::new();
    let step = (t1 - t0) / W_INITIAL_CELLS as f64;
    for k in 0..W_INITIAL_CELLS {
        let a = t0 + step * k as f64;
        let b = if k + 1 == W_INITIAL_CELLS { t1 } else { a + step };
        let mid = 0.5 * (a + b);
        let v = at(mid);
        if v < best.0 {
            best = (v, mid);
        }
        heap.push(Cell { lb: w_cell_lower(sd, i, q, a, b), t1: a, t2: b });
    }
    let mut lower = best.0;
    for _ in 0..200_000 {
        let Some(c) = heap.pop() else { break };
        lower = c.lb;
        if best.0 - c.lb <= W_BRACKET_TOL || c.t2 - c.t1 < 1e-15 {
            break;
        }
        let w = (c.t2 - c.t1) / 3.0;
        for j in 0..3 {
            let a = c.t1 + w * j as f64;
            let b = if j == 2 { c.t2 } else { a + w };
            let mid = 0.5 * (a + b);
            let v = at(mid);
            if v < best.0 {
                best = (v, mid);
            }
            let lb = w_cell_lower(sd, i, q, a, b);
            if lb < best.0 {
                heap.push(Cell { lb, t1: a, t2: b });
            }
        }
        lower = heap.peek().map_or(best.0, |c| c.lb.min(best.0));
    }
    WInf { lower: lower.min(best.0), upper: best.0, y: chart.from_chart(best.1) }
}

/// Lower bound for `inf { W_i(q, y) : q ∈ region, y ∈ Y, i ∈ symbols(q) }`.
///
/// Grid points of step `1/m` within the relaxed region stand in for nearby `q`;
/// `W` is 1-Lipschitz in `q` for the max-norm, so `1/m` is subtracted.
/// `symbols(g)` must list every symbol that may be assigned to `q` near `g`.
pub fn inf_w_region<F>(sd: &SpectralData, region: &RegionSpec, m: usize, symbols: F, exec: Execution) -> Result<WRegion>
where
    F: Fn(&[f64]) -> Vec<usize> + Sync + Send,
{
    let h = 1.0 / m as f64;
    let grid: Vec<Vec<f64>> = simplex_grid(sd.n, m).into_iter().filter(|g| region.contains_relaxed(g, h)).collect();
    if grid.is_empty() {
        return Err(Error::Infeasible("region contains no grid point".into()));
    }
    let per_point = par::map_slice(exec, &grid, |g| {
        symbols(g)
            .into_iter()
            .map(|s| (inf_w(sd, s, g).lower, s))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap_or((f64::INFINITY, 0))
    });
    let (k, &(w, symbol)) = per_point
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("non-empty grid");
    Ok(WRegion { lower: w - h, grid_min: w, q: grid[k].clone(), symbol, m })
}

/// Like [`inf_w_region`] with a fixed symbol set, but only cells whose bound
/// falls below half the smallest sampled `W` are refined (step halved, up to
/// `max_m`). Thin constraints such as a ball complement then do not force a
/// fine grid everywhere.
///
/// Returns the smallest certified bound among accepted cells, or `Err` when some
/// cell still fails at `max_m` or the work list exceeds `max_points`.
pub fn inf_w_region_adaptive(
    sd: &SpectralData,
    region: &RegionSpec,
    symbols: &[usize],
    m0: usize,
    max_m: usize,
    max_points: usize,
    exec: Execution,
) -> Result<WRegion> {
    let n = sd.n;
    // (certified cell bound, symbol, sampled W when the point is in the region)
    let eval = |pts: &[Vec<usize>], m: usize| -> Vec<Option<(f64, usize, f64)>> {
        let h = 1.0 / m as f64;
        par::map_slice(exec, pts, |c| {
            let g: Vec<f64> = c.iter().map(|&k| k as f64 * h).collect();
            if !region.contains_relaxed(&g, h) {
                return None;
            }
            let inside = region.contains(&g);
            symbols
                .iter()
                .map(|&i| {
                    let w = inf_w(sd, i, &g);
                    (w.lower - h, i, if inside { w.upper } else { f64::INFINITY })
                })
                .min_by(|a, b| a.0.total_cmp(&b.0))
        })
    };
    let mut pts: Vec<Vec<usize>> = Vec::new();
    compositions(n, m0, &mut Vec::new(), &mut pts);
    let mut m = m0;
    let mut best = WRegion { lower: f64::INFINITY, grid_min: f64::INFINITY, q: Vec::new(), symbol: 0, m };
    let mut sampled = f64::INFINITY;
    loop {
        let vals = eval(&pts, m);
        sampled = vals.iter().flatten().map(|v| v.2).fold(sampled, f64::min);
        let target = if sampled.is_finite() { sampled / 2.0 } else { 0.0 };
        let mut bad = Vec::new();
        for (c, v) in pts.iter().zip(vals) {
            let Some((lb, sym, _)) = v else { continue };
            if lb > target.max(0.0) {
                if lb < best.lower {
                    let h = 1.0 / m as f64;
                    best = WRegion { lower: lb, grid_min: lb + h, q: c.iter().map(|&k| k as f64 * h).collect(), symbol: sym, m };
                }
            } else {
                bad.push(c.clone());
            }
        }
        if bad.is_empty() {
            if best.q.is_empty() {
                return Err(Error::Infeasible("region contains no grid point".into()));
            }
            return Ok(best);
        }
        if 2 * m > max_m {
            return Err(Error::Numeric(format!("W bound not positive at grid 1/{m}")));
        }
        // Any q within 1/m of a coarse point c has a fine point within 1/(2m)
        // whose coordinates differ from 2c by at most 2.
        let mut next = std::collections::HashSet::new();
        for c in &bad {
            children(c, 2 * m, &mut Vec::new(), 0, &mut next);
            if next.len() > max_points {
                return Err(Error::Numeric(format!("W refinement exceeded {max_points} points at grid 1/{}", 2 * m)));
            }
        }
        pts = next.into_iter().collect();
        pts.sort();
        m *= 2;
    }
}

fn compositions(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() + 1 == n {
        cur.push(left);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    for k in 0..=left {
        cur.push(k);
        compositions(n, left - k, cur, out);
        cur.pop();
    }
}

fn children(c: &[usize], m: usize, cur: &mut Vec<usize>, used: usize, out: &mut std::collections::HashSet<Vec<usize>>) {
    let k = cur.len();
    if k + 1 == c.len() {
        let last = match m.checked_sub(used) {
            Some(v) => v,
            None => return,
        };
        if last.abs_diff(2 * c[k]) <= 2 {
            let mut v = cur.clone();
            v.push(last);
            out.insert(v);
        }
        return;
    }
    let centre = 2 * c[k];
    for x in centre.saturating_sub(2)..=centre + 2 {
        if used + x > m {
            break;
        }
        cur.push(x);
        children(c, m, cur, used + x, out);
        cur.pop();
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WRegion {
    /// Certified lower bound (grid minimum minus the grid slack).
    pub lower: f64,
    pub grid_min: f64,
    pub q: Vec<f64>,
    pub symbol: usize,
    pub m: usize,
}

/// The cyclic coloring of neighborhoods of the distinct vectors `𝔭_{j_1}, …, 𝔭_{j_ℓ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coloring {
    /// `(j_k, 𝔭_{j_k})` with `j_1 < … < j_ℓ`.
    pub reps: Vec<(usize, Vec<f64>)>,
    pub delta0: f64,
    pub radius: f64,
}

impl Coloring {
    pub fn new(reps: Vec<(usize, Vec<f64>)>) -> Result<Self> {
        if reps.len() < 2 {
            return Err(Error::Hypothesis("theorem-2 regime: all vectors p_i coincide".into()));
        }
        let mut delta0 = f64::INFINITY;
        for a in 0..reps.len() {
            for b in a + 1..reps.len() {
                delta0 = delta0.min(l1(&reps[a].1, &reps[b].1));
            }
        }
        if !(delta0 > 0.0) {
            return Err(Error::Numeric("coincident representatives".into()));
        }
        Ok(Coloring { reps, delta0, radius: delta0 / 4.0 })
    }

    pub fn from_spectral(sd: &SpectralData) -> Result<Self> {
        let mut reps: Vec<(usize, Vec<f64>)> = Vec::new();
        let mut seen: Vec<usize> = Vec::new();
        for (i, p) in sd.pvec.iter().enumerate() {
            if !seen.iter().any(|&j| sd.pvec[j].same_as(p)) {
                seen.push(i);
                reps.push((i, p.approx.clone()));
            }
        }
        Coloring::new(reps)
    }

    fn target(&self, k: usize) -> usize {
        self.reps[(k + 1) % self.reps.len()].0
    }

    pub fn color(&self, q: &[f64]) -> usize {
        let hits: Vec<usize> = (0..self.reps.len()).filter(|&k| l1(q, &self.reps[k].1) <= self.radius).collect();
        assert!(hits.len() <= 1, "coloring balls overlap");
        hits.first().map_or(0, |&k| self.target(k))
    }

    /// Colors that some `q` with `‖q − g‖₁ <= h` can receive.
    pub fn candidates(&self, g: &[f64], h: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let mut surely_inside = false;
        for k in 0..self.reps.len() {
            let d = l1(g, &self.reps[k].1);
            if d <= self.radius + h {
                out.push(self.target(k));
            }
            if d <= self.radius - h {
                surely_inside = true;
            }
        }
        if !surely_inside {
            out.push(0);
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// `𝒜(q)` for the given distinct vectors.
pub fn coloring(q: &[f64], pset: &[(usize, Vec<f64>)]) -> Result<usize> {
    Ok(Coloring::new(pset.to_vec())?.color(q))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Eps1 {
    /// Certified lower bound for `inf_{q, y} W_{𝒜(q)}(q, y)`.
    pub value: f64,
    pub delta0: f64,
    /// `(j_k, min{δ₀/(4N), ε_{j_k}})` with `ε_{j_k}` estimated on a chart grid.
    pub pieces: Vec<(usize, f64)>,
    pub m: usize,
}

/// Grid resolution used for `ε̃₁` by alphabet size.
pub fn default_grid(n: usize) -> usize {
    match n {
        2 => 400,
        3 => 90,
        4 => 36,
        _ => 16,
    }
}

/// `ε̃₁ = inf { W_{𝒜(q)}(q, y) : q ∈ simplex, y ∈ Y }`, certified from below.
/// The grid is refined (up to three doublings) until the bound is positive.
pub fn eps1_tilde(sd: &SpectralData, m: usize, exec: Execution) -> Result<Eps1> {
    let col = Coloring::from_spectral(sd)?;
    let mut m = m;
    for _ in 0..4 {
        let h = sd.n as f64 / m as f64;
        let w = inf_w_region(sd, &RegionSpec::Full, m, |g| col.candidates(g, h), exec)?;
        if w.lower > 0.0 {
            let pieces = col
                .reps
                .iter()
                .map(|(j, p)| (*j, (col.delta0 / (4.0 * sd.n as f64)).min(eps_j(sd, *j, p, col.radius))))
                .collect();
            return Ok(Eps1 { value: w.lower, delta0: col.delta0, pieces, m });
        }
        m *= 2;
    }
    Err(Error::Numeric(format!("W envelope not positive at grid 1/{m}")))
}

fn eps_j(sd: &SpectralData, j: usize, pj: &[f64], radius: f64) -> f64 {
    let (t0, t1) = sd.domain.chart_bounds();
    let steps = 4096;
    let mut best = f64::INFINITY;
    for k in 0..=steps {
        let y = sd.domain.chart.from_chart(t0 + (t1 - t0) * k as f64 / steps as f64);
        let g = sd.g_vec_f64(y);
        if l1(&g, pj) > radius {
            best = best.min(linf(&sd.g_vec_f64(sd.h_f64(j, y)), &g));
        }
    }
    best
}

/// `max_{q ∈ box ∩ simplex} Σ p_k log q_k`, returned as `(s_N(p|q), q)`.
pub fn best_q_in_box(p: &[f64], lo: &[f64], hi: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = p.len();
    if lo.iter().sum::<f64>() > 1.0 + 1e-12 || hi.iter().sum::<f64>() < 1.0 - 1e-12 {
        return Err(Error::Infeasible("box does not meet the simplex".into()));
    }
    let active: Vec<bool> = p.iter().map(|&x| x > 0.0).collect();
    let fill = |lam: f64| -> Vec<f64> {
        (0..n).map(|k| if active[k] { (p[k] / lam).clamp(lo[k], hi[k]) } else { lo[k] }).collect()
    };
    let most: f64 = (0..n).map(|k| if active[k] { hi[k] } else { lo[k] }).sum();
    let q = if most < 1.0 {
        let mut q = fill(0.0);
        let mut rem = 1.0 - most;
        for k in 0..n {
            if !active[k] && rem > 0.0 {
                let add = rem.min(hi[k] - lo[k]);
                q[k] += add;
                rem -= add;
            }
        }
        q
    } else {
        let (mut l, mut h) = (-745.0f64, 745.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (l + h);
            if fill(mid.exp()).iter().sum::<f64>() > 1.0 {
                l = mid;
            } else {
                h = mid;
            }
        }
        fill(l.exp())
    };
    Ok((rel_entropy(p, &q), q))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupEntropy {
    pub value: f64,
    pub y: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Best value on the chart grid before refinement.
    pub grid_value: f64,
}

pub const SUP_GRID: usize = 4000;

/// `sup { s_N(G(y)|q) : y ∈ Y, q ∈ region }` for a box-shaped region.
pub fn sup_entropy_region(sd: &SpectralData, region: &RegionSpec) -> Result<SupEntropy> {
    let (lo, hi) = region
        .box_bounds(sd.n)
        .ok_or_else(|| Error::Infeasible("entropy supremum needs a box-shaped region".into()))?;
    let chart = sd.domain.chart;
    let (t0, t1) = sd.domain.chart_bounds();
    let value_at = |t: f64| -> Result<f64> { Ok(best_q_in_box(&sd.g_vec_f64(chart.from_chart(t)), &lo, &hi)?.0) };
    let steps = if sd.domain.is_point() || t1 <= t0 { 0 } else { SUP_GRID };
    let mut best = (value_at(t0)?, t0, 0usize);
    for k in 1..=steps {
        let t = t0 + (t1 - t0) * k as f64 / steps as f64;
        let v = value_at(t)?;
        if v > best.0 {
            best = (v, t, k);
        }
    }
    let grid_value = best.0;
    if steps > 0 {
        let cell = (t1 - t0) / steps as f64;
        let (mut a, mut b) = ((best.1 - cell).max(t0), (best.1 + cell).min(t1));
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if value_at(c)? >= value_at(d)? {
                b = d;
            } else {
                a = c;
            }
        }
        let t = 0.5 * (a + b);
        let v = value_at(t)?;
        if v > best.0 {
            best = (v, t, best.2);
        }
    }
    let y = chart.from_chart(best.1);
    let p = sd.g_vec_f64(y);
    let (value, q) = best_q_in_box(&p, &lo, &hi)?;
    Ok(SupEntropy { value, y, p, q, grid_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_maps::{IntervalMap, MapSystem};
    use crate::rat::{int, rat};

    const LN2: f64 = std::f64::consts::LN_2;

    fn mob(a: i64, b: i64, c: i64, d: i64) -> IntervalMap {
        IntervalMap::mobius(int(a), int(b), int(c), int(d)).unwrap()
    }

    fn ex1() -> SpectralData {
        SpectralData::new(&MapSystem::new(vec![mob(1, 0, -1, 6), mob(3, 1, -1, 5)]).unwrap()).unwrap()
    }

    fn ex3() -> SpectralData {
        SpectralData::new(
            &MapSystem::new(vec![
                IntervalMap::affine(rat(1, 3), int(0)).unwrap(),
                IntervalMap::affine(rat(1, 6), rat(1, 3)).unwrap(),
                IntervalMap::affine(rat(1, 6), rat(1, 2)).unwrap(),
                IntervalMap::affine(rat(1, 3), rat(2, 3)).unwrap(),
            ])
            .unwrap(),
        )
        .unwrap()
    }

    fn brute_v(q: &[f64], eps: f64, step: usize) -> f64 {
        simplex_grid(q.len(), step)
            .iter()
            .filter(|p| l1(p, q) >= eps)
            .map(|p| rel_entropy(p, q))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn relative_entropy_values() {
        assert!((rel_entropy(&[0.2, 0.8], &[0.8, 0.2]) + 1.2 * LN2).abs() < 1e-15);
        assert_eq!(rel_entropy(&[0.3, 0.7], &[0.3, 0.7]), 0.0);
        let v = rel_entropy(&[1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0], &[0.25; 4]);
        assert!((v + 0.056633).abs() < 1e-6);
        assert_eq!(rel_entropy(&[0.5, 0.5], &[1.0, 0.0]), f64::NEG_INFINITY);
        assert_eq!(rel_entropy(&[1.0, 0.0], &[0.5, 0.5]), -LN2);
    }

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVector::new(vec![1.5, -0.5]).is_err());
        let p = ProbVector::from_rats(&[rat(1, 3), rat(2, 3)]).unwrap();
        assert!(p.is_positive() && p.in_interior(0.3) && !p.in_interior(0.4));
    }

    #[test]
    fn v_half_half() {
        let v = v_full(&[0.5, 0.5], 1.0).unwrap();
        assert!((v + LN2).abs() < 1e-12, "{v}");
        let vb = v_of(&[0.5, 0.5], 1.0, &RegionSpec::boxed(2, &[])).unwrap();
        assert!((vb + LN2).abs() < 1e-9, "{vb}");
    }

    #[test]
    fn v_closed_form_matches_brute_force() {
        for q in [vec![0.2, 0.3, 0.5], vec![0.1, 0.1, 0.4, 0.4], vec![0.7, 0.3]] {
            for eps in [0.1, 0.4, 0.9] {
                let v = v_full(&q, eps).unwrap();
                let b = brute_v(&q, eps, 200.min(if q.len() == 4 { 60 } else { 200 }));
                assert!(v >= b - 1e-12, "closed form below a feasible value");
                assert!(v - b < 2e-2, "{q:?} {eps}: {v} vs {b}");
                let vb = v_of(&q, eps, &RegionSpec::boxed(q.len(), &[])).unwrap();
                assert!((vb - v).abs() < 1e-7, "{q:?} {eps}: box {vb} vs closed {v}");
            }
        }
    }

    #[test]
    fn v_global_is_the_max() {
        for eps in [0.2, 0.6, 1.2] {
            let g = v_global(eps);
            let best = simplex_grid(3, 120).iter().filter_map(|q| v_full(q, eps).ok()).fold(f64::NEG_INFINITY, f64::max);
            assert!(best <= g + 1e-12 && g - best < 1e-3, "{eps}: {best} vs {g}");
            let ub = v_max_over_region(3, eps, &RegionSpec::Full, 120, Execution::Sequential).unwrap();
            assert!(ub >= g - 1e-12);
        }
    }

    #[test]
    fn v_box_restricts() {
        let q = [0.5, 0.5];
        let region = RegionSpec::boxed(2, &[(0, 0.1, 0.9)]);
        let v = v_of(&q, 0.8, &region).unwrap();
        assert!((v - rel_entropy(&[0.1, 0.9], &q)).abs() < 1e-9);
        assert!(v_of(&q, 1.0, &region).is_err());
    }

    #[test]
    fn w_values() {
        let sd = ex3();
        let q = [0.125, 0.375, 0.375, 0.125];
        for i in 0..4 {
            assert!((w_of(&sd, i, &q, 0.0) - 5.0 / 24.0).abs() < 1e-15);
            assert!((inf_w(&sd, i, &q).lower - 5.0 / 24.0).abs() < 1e-15);
        }
        let sd1 = ex1();
        assert!(w_of(&sd1, 0, &[1.0 / 6.0, 5.0 / 6.0], -0.2) < 1e-12);
        for i in 0..2 {
            let r = inf_w(&sd1, i, &[0.8, 0.2]);
            assert!(r.lower >= 0.6 - 1e-12 && r.upper - r.lower <= W_BRACKET_TOL, "{r:?}");
        }
    }

    #[test]
    fn inf_w_brackets_grid_minimum() {
        let sd = ex1();
        let q = [0.3, 0.7];
        for i in 0..2 {
            let r = inf_w(&sd, i, &q);
            let grid = (0..=20000).map(|k| w_of(&sd, i, &q, -1.0 + k as f64 / 20000.0)).fold(f64::INFINITY, f64::min);
            assert!(r.lower <= grid + 1e-12 && grid - r.lower < 1e-4, "{r:?} vs {grid}");
        }
    }

    #[test]
    fn coloring_example_one() {
        let reps = vec![(0, vec![1.0 / 6.0, 5.0 / 6.0]), (1, vec![0.0, 1.0])];
        assert_eq!(coloring(&[1.0 / 6.0, 5.0 / 6.0], &reps).unwrap(), 1);
        assert_eq!(coloring(&[0.0, 1.0], &reps).unwrap(), 0);
        assert_eq!(coloring(&[0.5, 0.5], &reps).unwrap(), 0);
        assert!(coloring(&[0.5, 0.5], &reps[..1]).is_err());
        let col = Coloring::new(reps).unwrap();
        assert!((col.delta0 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(col.candidates(&[0.2, 0.8], 0.05), vec![0, 1]);
    }

    #[test]
    fn eps1_positive_example_one() {
        let e = eps1_tilde(&ex1(), 200, Execution::Sequential).unwrap();
        assert!(e.value > 0.0 && e.value < 1.0 / 24.0 + 1e-9, "{e:?}");
        assert!(eps1_tilde(&ex3(), 20, Execution::Sequential).is_err());
    }

    #[test]
    fn sup_entropy_examples() {
        let r1 = sup_entropy_region(&ex1(), &RegionSpec::boxed(2, &[(0, 0.8, 1.0)])).unwrap();
        assert!((r1.value + 1.2 * LN2).abs() < 1e-9, "{r1:?}");
        assert!(r1.y.abs() < 1e-9);
        let r3 = sup_entropy_region(&ex3(), &RegionSpec::boxed(4, &[(0, 0.0, 0.125), (3, 0.0, 0.125)])).unwrap();
        assert!((r3.value - 4.0 / 3.0 * (0.75f64).ln()).abs() < 1e-9, "{r3:?}");
    }

    #[test]
    fn best_q_uses_free_coordinates() {
        let (v, q) = best_q_in_box(&[1.0, 0.0], &[0.0, 0.0], &[0.3, 1.0]).unwrap();
        assert!((q[0] - 0.3).abs() < 1e-12 && (q[1] - 0.7).abs() < 1e-12);
        assert!((v - 0.3f64.ln()).abs() < 1e-12);
    }
}

//! Exact extreme cylinder widths per depth for linear-fractional systems.
//!
//! Exhaustive enumeration is `N^depth`; instead a depth-first branch and bound
//! over prefixes keeps only words that can still beat the current extreme.
//! For a prefix `P` and any suffix `s` of length `j`,
//! `min P' · width(s) <= width(P s) <= min(width(P), max P' · width(s))`,
//! so the extremes found at shallower depths bound every completion.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::system::MapSystem;
use crate::error::{Error, Result};
use crate::rat::{from_f64, to_f64, Rat};

pub const DEFAULT_DEPTH_CAP: usize = 40;
const DEFAULT_NODE_CAP: u64 = 5_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthOptions {
    pub depth_cap: usize,
    /// Search nodes allowed per depth and direction.
    pub node_cap: u64,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        GrowthOptions { depth_cap: DEFAULT_DEPTH_CAP, node_cap: DEFAULT_NODE_CAP }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DepthExtremes {
    pub depth: usize,
    pub min_width: Rat,
    pub min_word: Vec<usize>,
    pub max_width: Rat,
    pub max_word: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    pub depth: usize,
    /// Rational `c` with `c^n <= min width at depth n` for every `n <= depth`.
    pub c_lower_exact: Rat,
    /// `max_n n · (max width at depth n)`, exact.
    pub c_upper_exact: Rat,
    pub c_lower: f64,
    pub c_upper: f64,
    pub per_depth: Vec<DepthExtremes>,
    /// Depths where `c^n <= width <= C/n` fails; zero by construction of `c`, `C`.
    pub violations: Vec<usize>,
    pub nodes_visited: u64,
}

impl GrowthReport {
    /// Exact check of `c^n <= w <= C/n` for a width observed at depth `n`.
    pub fn admits(&self, n: usize, width: &Rat) -> bool {
        let lo = num_traits::pow(self.c_lower_exact.clone(), n);
        let hi = &self.c_upper_exact / Rat::from_integer(BigInt::from(n));
        &lo <= width && width <= &hi
    }
}

#[derive(Clone, Debug)]
struct Mat {
    a: BigInt,
    b: BigInt,
    c: BigInt,
    d: BigInt,
}

impl Mat {
    fn identity() -> Self {
        Mat { a: BigInt::one(), b: BigInt::zero(), c: BigInt::zero(), d: BigInt::one() }
    }

    fn mul(&self, o: &Mat) -> Mat {
        Mat {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    fn width(&self) -> Rat {
        let e = &self.c + &self.d;
        Rat::new(self.det(), &self.d * e)
    }

    fn max_derivative(&self) -> Rat {
        let e = &self.c + &self.d;
        let m = if e < self.d { e } else { self.d.clone() };
        Rat::new(self.det(), &m * &m)
    }

    fn min_derivative(&self) -> Rat {
        let e = &self.c + &self.d;
        let m = if e > self.d { e } else { self.d.clone() };
        Rat::new(self.det(), &m * &m)
    }
}

struct Search<'a> {
    gens: &'a [Mat],
    n: usize,
    /// Extremes at shallower depths, indexed by suffix length (index 0 is 1).
    bound_widths: &'a [Rat],
    best: Rat,
    best_word: Vec<usize>,
    word: Vec<usize>,
    nodes: u64,
    cap: u64,
    maximize: bool,
}

impl Search<'_> {
    fn run(&mut self, p: &Mat) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(Error::Numeric(format!("growth search exceeded {} nodes at depth {}", self.cap, self.n)));
        }
        let k = self.word.len();
        if k == self.n {
            let w = p.width();
            let better = if self.maximize { w > self.best } else { w < self.best };
            if better {
                self.best = w;
                self.best_word = self.word.clone();
            }
            return Ok(());
        }
        let rest = self.bound_widths.get(self.n - k);
        if let (Some(rest), true) = (rest, self.maximize) {
            let w = p.width();
            let via_derivative = p.max_derivative() * rest;
            let bound = if via_derivative < w { via_derivative } else { w };
            if bound <= self.best {
                return Ok(());
            }
        } else if let Some(rest) = rest {
            if p.min_derivative() * rest >= self.best {
                return Ok(());
            }
        }
        let mut children: Vec<(Rat, usize, Mat)> = self
            .gens
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let m = p.mul(g);
                (m.width(), i, m)
            })
            .collect();
        if self.maximize {
            children.sort_by(|x, y| y.0.cmp(&x.0));
        } else {
            children.sort_by(|x, y| x.0.cmp(&y.0));
        }
        for (_, i, m) in children {
            self.word.push(i);
            self.run(&m)?;
            self.word.pop();
        }
        Ok(())
    }
}

fn greedy(gens: &[Mat], n: usize, maximize: bool) -> (Rat, Vec<usize>) {
    let mut p = Mat::identity();
    let mut word = Vec::with_capacity(n);
    for _ in 0..n {
        let (i, m) = gens
            .iter()
            .enumerate()
            .map(|(i, g)| (i, p.mul(g)))
            .reduce(|x, y| {
                let better = if maximize { y.1.width() > x.1.width() } else { y.1.width() < x.1.width() };
                if better {
                    y
                } else {
                    x
                }
            })
            .expect("non-empty system");
        word.push(i);
        p = m;
    }
    (p.width(), word)
}

fn integer_matrices(sys: &MapSystem) -> Result<Vec<Mat>> {
    let ms = sys.mobius_maps().ok_or(Error::NotExact)?;
    Ok(ms
        .iter()
        .map(|m| {
            let n = m.normalized();
            Mat { a: n.a.to_integer(), b: n.b.to_integer(), c: n.c.to_integer(), d: n.d.to_integer() }
        })
        .collect())
}

/// Exact minimum and maximum cylinder widths for every depth `1..=max_depth`,
/// with fitted constants `c^n <= width <= C/n`.
pub fn growth_bounds_check(sys: &MapSystem, max_depth: usize) -> Result<GrowthReport> {
    growth_bounds_with(sys, max_depth, &GrowthOptions::default())
}

pub fn growth_bounds_with(sys: &MapSystem, max_depth: usize, opts: &GrowthOptions) -> Result<GrowthReport> {
    if max_depth > opts.depth_cap {
        return Err(Error::DepthCap { requested: max_depth, cap: opts.depth_cap });
    }
    if max_depth == 0 {
        return Err(Error::InvalidMap("growth check needs depth >= 1".into()));
    }
    let gens = integer_matrices(sys)?;
    let mut mins = vec![Rat::one()];
    let mut maxs = vec![Rat::one()];
    let mut per_depth = Vec::with_capacity(max_depth);
    let mut nodes = 0u64;
    for n in 1..=max_depth {
        let mut out = Vec::with_capacity(2);
        for maximize in [false, true] {
            let (seed, seed_word) = greedy(&gens, n, maximize);
            let mut s = Search {
                gens: &gens,
                n,
                bound_widths: if maximize { &maxs } else { &mins },
                best: seed.clone(),
                best_word: seed_word,
                word: Vec::with_capacity(n),
                nodes: 0,
                cap: opts.node_cap,
                maximize,
            };
            s.run(&Mat::identity())?;
            nodes += s.nodes;
            out.push((s.best, s.best_word));
        }
        let (max_w, max_word) = out.pop().unwrap();
        let (min_w, min_word) = out.pop().unwrap();
        mins.push(min_w.clone());
        maxs.push(max_w.clone());
        per_depth.push(DepthExtremes { depth: n, min_width: min_w, min_word, max_width: max_w, max_word });
    }
    let c_upper_exact = per_depth
        .iter()
        .map(|e| &e.max_width * Rat::from_integer(BigInt::from(e.depth)))
        .max()
        .unwrap();
    let c_lower_exact = fit_c_lower(&per_depth);
    let mut report = GrowthReport {
        depth: max_depth,
        c_lower: to_f64(&c_lower_exact),
        c_upper: to_f64(&c_upper_exact),
        c_lower_exact,
        c_upper_exact,
        per_depth,
        violations: Vec::new(),
        nodes_visited: nodes,
    };
    report.violations = report
        .per_depth
        .iter()
        .filter(|e| !(report.admits(e.depth, &e.min_width) && report.admits(e.depth, &e.max_width)))
        .map(|e| e.depth)
        .collect();
    Ok(report)
}

/// A rational `c` just below `min_n m_n^{1/n}` with `c^n <= m_n` checked exactly.
fn fit_c_lower(per_depth: &[DepthExtremes]) -> Rat {
    let est = per_depth
        .iter()
        .map(|e| (to_f64(&e.min_width).ln() / e.depth as f64).exp())
        .fold(f64::INFINITY, f64::min);
    let ok = |c: &Rat| per_depth.iter().all(|e| num_traits::pow(c.clone(), e.depth) <= e.min_width);
    let mut shrink = 1e-9;
    loop {
        let c = from_f64(est * (1.0 - shrink)).expect("finite estimate");
        if ok(&c) {
            return c;
        }
        shrink *= 10.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_maps::IntervalMap;
    use crate::rat::{int, rat};

    fn example1() -> MapSystem {
        MapSystem::new(vec![
            IntervalMap::mobius(int(1), int(0), int(-1), int(6)).unwrap(),
            IntervalMap::mobius(int(3), int(1), int(-1), int(5)).unwrap(),
        ])
        .unwrap()
    }

    fn example3() -> MapSystem {
        MapSystem::new(vec![
            IntervalMap::affine(rat(1, 3), int(0)).unwrap(),
            IntervalMap::affine(rat(1, 6), rat(1, 3)).unwrap(),
            IntervalMap::affine(rat(1, 6), rat(1, 2)).unwrap(),
            IntervalMap::affine(rat(1, 3), rat(2, 3)).unwrap(),
        ])
        .unwrap()
    }

    fn brute(sys: &MapSystem, n: usize) -> (Rat, Rat) {
        let k = sys.len();
        let mut lo: Option<Rat> = None;
        let mut hi: Option<Rat> = None;
        for code in 0..k.pow(n as u32) {
            let mut c = code;
            let word: Vec<usize> = (0..n)
                .map(|_| {
                    let s = c % k;
                    c /= k;
                    s
                })
                .collect();
            let w = sys.compose_word(&word).unwrap().width();
            if lo.as_ref().is_none_or(|l| &w < l) {
                lo = Some(w.clone());
            }
            if hi.as_ref().is_none_or(|h| &w > h) {
                hi = Some(w);
            }
        }
        (lo.unwrap(), hi.unwrap())
    }

    #[test]
    fn matches_brute_force() {
        for sys in [example1(), example3()] {
            let rep = growth_bounds_check(&sys, 6).unwrap();
            for e in &rep.per_depth {
                let (lo, hi) = brute(&sys, e.depth);
                assert_eq!(e.min_width, lo, "depth {}", e.depth);
                assert_eq!(e.max_width, hi, "depth {}", e.depth);
            }
            assert!(rep.violations.is_empty());
        }
    }

    #[test]
    fn depth_one_is_single_maps() {
        let rep = growth_bounds_check(&example1(), 1).unwrap();
        assert_eq!(rep.per_depth[0].min_width, rat(1, 5));
        assert_eq!(rep.per_depth[0].max_width, rat(4, 5));
        assert!(rep.c_lower_exact <= rat(1, 5));
    }

    #[test]
    fn affine_extremes_are_powers() {
        let rep = growth_bounds_check(&example3(), 12).unwrap();
        for e in &rep.per_depth {
            assert_eq!(e.max_width, num_traits::pow(rat(1, 3), e.depth));
            assert_eq!(e.min_width, num_traits::pow(rat(1, 6), e.depth));
        }
        assert!(rep.c_lower_exact <= rat(1, 6));
    }

    #[test]
    fn cap_enforced() {
        assert!(matches!(growth_bounds_check(&example1(), 41), Err(Error::DepthCap { requested: 41, cap: 40 })));
    }
}

//! Simulation of the place-dependent chain `ν₀`: from `y₀ = 0`, draw
//! `ξ = i` with probability `G_i(y)` and move to `H_i(y)`.
//!
//! Long-run averages stand in for the almost-sure limits; every statistic is
//! reported at a fixed step count with a confidence interval over chains.
//! Chain `k` draws from a ChaCha8 stream seeded by `(seed, k)`, so results are
//! identical for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conjugacy::ConjugacyPair;
use crate::entropy_opt::{rel_entropy, ProbVector};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::spectral_y::SpectralData;

/// Largest tolerated negative rounding in `G_i(y)`.
pub const NEG_PROB_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub steps: usize,
    pub chains: usize,
    pub q: ProbVector,
}

impl SimConfig {
    pub fn new(seed: u64, steps: usize, chains: usize, q: ProbVector) -> Result<Self> {
        if steps == 0 || chains == 0 {
            return Err(Error::Domain { value: format!("steps = {steps}, chains = {chains}") });
        }
        if !q.is_positive() {
            return Err(Error::Domain { value: format!("q = {:?} must be strictly positive", &q[..]) });
        }
        Ok(SimConfig { seed, steps, chains, q })
    }
}

/// One step of a chain, as seen by a visitor.
#[derive(Clone, Copy, Debug)]
pub struct Step<'a> {
    pub index: usize,
    pub y: f64,
    pub p: &'a [f64],
    pub symbol: usize,
}

pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

fn draw(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &pi) in p.iter().enumerate() {
        if pi > 0.0 {
            acc += pi;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Runs one chain for `steps` steps, calling `visit` before each move.
pub fn run_chain<F>(sd: &SpectralData, seed: u64, chain: usize, steps: usize, mut visit: F) -> Result<f64>
where
    F: FnMut(Step<'_>),
{
    let mut rng = chain_rng(seed, chain);
    let mut y = 0.0f64;
    let mut p = Vec::with_capacity(sd.n);
    for index in 0..steps {
        sd.g_into(y, &mut p);
        if let Some(bad) = p.iter().find(|&&x| x < -NEG_PROB_TOL) {
            return Err(Error::Numeric(format!("G(y) has a negative entry {bad} at y = {y}")));
        }
        p.iter_mut().for_each(|x| *x = x.max(0.0));
        let symbol = draw(&p, rng.random::<f64>());
        visit(Step { index, y, p: &p, symbol });
        y = sd.h_f64(symbol, y);
    }
    Ok(y)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    /// Half-width of the normal 95% interval for the mean.
    pub ci95: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
        let std = var.sqrt();
        Summary { mean, std, ci95: 1.96 * std / k.sqrt() }
    }

    pub fn std_err(&self) -> f64 {
        self.ci95 / 1.96
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainStats {
    /// `−log R_n / n = (1/n) Σ (log q_ξ − log G_ξ(y))`.
    pub neg_log_r: f64,
    /// `(1/n) Σ s_N(G(y_j) | q)`.
    pub birkhoff: f64,
    pub counts: Vec<u64>,
    pub y_min: f64,
    pub y_max: f64,
    /// Every visited state lay in `Y`.
    pub stayed_in_y: bool,
}

impl ChainStats {
    pub fn frequency(&self, set: &[usize]) -> f64 {
        let n: u64 = self.counts.iter().sum();
        set.iter().map(|&i| self.counts[i]).sum::<u64>() as f64 / n as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathStats {
    pub steps: usize,
    pub chains: Vec<ChainStats>,
    pub neg_log_r: Summary,
    pub birkhoff: Summary,
    /// Per-symbol frequency summaries.
    pub freqs: Vec<Summary>,
}

impl PathStats {
    /// One row per chain plus a `mean` row.
    pub fn to_csv(&self) -> String {
        let n = self.freqs.len();
        let mut s = String::from("chain,neg_log_r,birkhoff");
        for k in 0..n {
            s.push_str(&format!(",freq_{k}"));
        }
        s.push('\n');
        for (c, st) in self.chains.iter().enumerate() {
            s.push_str(&format!("{c},{:.10},{:.10}", st.neg_log_r, st.birkhoff));
            for k in 0..n {
                s.push_str(&format!(",{:.10}", st.frequency(&[k])));
            }
            s.push('\n');
        }
        s.push_str(&format!("mean,{:.10},{:.10}", self.neg_log_r.mean, self.birkhoff.mean));
        for f in &self.freqs {
            s.push_str(&format!(",{:.10}", f.mean));
        }
        s.push('\n');
        s
    }
}

/// Simulates `cfg.chains` independent paths of `ν₀`.
pub fn sample_path(sd: &SpectralData, cfg: &SimConfig, exec: Execution) -> Result<PathStats> {
    if cfg.q.len() != sd.n {
        return Err(Error::Domain { value: format!("q has {} entries, alphabet has {}", cfg.q.len(), sd.n) });
    }
    let log_q: Vec<f64> = cfg.q.iter().map(|x| x.ln()).collect();
    let per_chain = par::map_range(exec, cfg.chains, |c| -> Result<ChainStats> {
        let mut sum_r = 0.0;
        let mut sum_s = 0.0;
        let mut counts = vec![0u64; sd.n];
        let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut inside = true;
        run_chain(sd, cfg.seed, c, cfg.steps, |st| {
            sum_r += log_q[st.symbol] - st.p[st.symbol].ln();
            sum_s += rel_entropy(st.p, &cfg.q);
            counts[st.symbol] += 1;
            y_min = y_min.min(st.y);
            y_max = y_max.max(st.y);
            inside &= sd.domain.contains_f64(st.y, 1e-12);
        })?;
        let n = cfg.steps as f64;
        Ok(ChainStats { neg_log_r: sum_r / n, birkhoff: sum_s / n, counts, y_min, y_max, stayed_in_y: inside })
    });
    let chains = per_chain.into_iter().collect::<Result<Vec<_>>>()?;
    let col = |f: &dyn Fn(&ChainStats) -> f64| Summary::of(&chains.iter().map(f).collect::<Vec<_>>());
    let neg_log_r = col(&|c| c.neg_log_r);
    let birkhoff = col(&|c| c.birkhoff);
    let freqs = (0..sd.n).map(|k| col(&|c| c.frequency(&[k]))).collect();
    Ok(PathStats { steps: cfg.steps, chains, neg_log_r, birkhoff, freqs })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRatioStats {
    pub neg_log_r: Summary,
    pub birkhoff: Summary,
}

impl LogRatioStats {
    /// Whether the two long-run averages agree within `widths` confidence widths.
    pub fn agree(&self, widths: f64) -> bool {
        let w = self.neg_log_r.ci95.max(self.birkhoff.ci95).max(1e-12);
        (self.neg_log_r.mean - self.birkhoff.mean).abs() <= widths * 2.0 * w
    }
}

/// `−log R_n / n` and the Birkhoff mean of `s_N(p_j | q)`, which share the same limit.
pub fn log_ratio_stats(path: &PathStats) -> LogRatioStats {
    LogRatioStats { neg_log_r: path.neg_log_r, birkhoff: path.birkhoff }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyReport {
    pub set: Vec<usize>,
    pub c_i: f64,
    /// `3 sqrt(log n / n)`.
    pub slack: f64,
    pub min_frequency: f64,
    /// `min_frequency − (c_I − slack)`; non-negative when every chain passes.
    pub margin: f64,
    pub pass: bool,
}

/// Compares the symbol-set frequency of every chain against `c_I` minus the Azuma-type slack.
pub fn frequency_check(path: &PathStats, set: &[usize], c_i: f64) -> FrequencyReport {
    let n = path.steps as f64;
    let slack = 3.0 * (n.ln().max(1.0) / n).sqrt();
    let min_frequency = path.chains.iter().map(|c| c.frequency(set)).fold(f64::INFINITY, f64::min);
    let margin = min_frequency - (c_i - slack);
    FrequencyReport { set: set.to_vec(), c_i, slack, min_frequency, margin, pass: margin >= 0.0 }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimConfig {
    pub seed: u64,
    /// Word length `n` of the sampled cylinders.
    pub steps: usize,
    pub chains: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimEstimate {
    pub estimate: Summary,
    pub per_chain: Vec<f64>,
    pub depth: usize,
}

/// Depth beyond which the estimate is not extended.
pub const DIM_DEPTH_CAP: usize = 1_000_000;

/// Local-dimension estimate `log μ_φ(I_n) / log |I_n|` along `μ_φ`-typical words.
///
/// Words are drawn from `ν₀`, whose cylinder law equals `μ_φ` on `f`-cylinders.
/// `log μ_φ(I_n) = Σ log G_ξ(y)` and `log |I_n|` is a sum of logarithms of
/// divided differences of the `f`-maps, so neither underflows.
pub fn empirical_dimension(pair: &ConjugacyPair, cfg: &DimConfig, exec: Execution) -> Result<DimEstimate> {
    if cfg.steps == 0 || cfg.chains == 0 {
        return Err(Error::Domain { value: format!("steps = {}, chains = {}", cfg.steps, cfg.chains) });
    }
    let sd = SpectralData::new(&pair.g)?;
    let depth = cfg.steps.min(DIM_DEPTH_CAP);
    let per_chain = par::map_range(exec, cfg.chains, |c| -> Result<f64> {
        let mut word = Vec::with_capacity(depth);
        let mut log_mu = 0.0;
        run_chain(&sd, cfg.seed, c, depth, |st| {
            log_mu += st.p[st.symbol].ln();
            word.push(st.symbol);
        })?;
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let mut log_len = 0.0;
        for &s in word.iter().rev() {
            let m = pair.f.map(s);
            log_len += m.divided_difference_f64(a, b).ln();
            a = m.apply_f64(a);
            b = m.apply_f64(b);
        }
        Ok(log_mu / log_len)
    });
    let per_chain = per_chain.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(DimEstimate { estimate: Summary::of(&per_chain), per_chain, depth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy_opt::{inf_w, v_full, Coloring};
    use crate::exact_maps::{IntervalMap, MapSystem};
    use crate::rat::{int, rat, Rat};

    fn mob(a: i64, b: i64, c: i64, d: i64) -> IntervalMap {
        IntervalMap::mobius(int(a), int(b), int(c), int(d)).unwrap()
    }

    fn ex1() -> SpectralData {
        SpectralData::new(&MapSystem::new(vec![mob(1, 0, -1, 6), mob(3, 1, -1, 5)]).unwrap()).unwrap()
    }

    fn ex3() -> SpectralData {
        let a = |s, b| IntervalMap::affine(s, b).unwrap();
        SpectralData::new(
            &MapSystem::new(vec![
                a(rat(1, 3), int(0)),
                a(rat(1, 6), rat(1, 3)),
                a(rat(1, 6), rat(1, 2)),
                a(rat(1, 3), rat(2, 3)),
            ])
            .unwrap(),
        )
        .unwrap()
    }

    fn cfg(seed: u64, steps: usize, chains: usize, q: &[f64]) -> SimConfig {
        SimConfig::new(seed, steps, chains, ProbVector::new(q.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn config_rejects_boundary_q() {
        let q = ProbVector::new(vec![1.0, 0.0]).unwrap();
        assert!(SimConfig::new(1, 10, 1, q).is_err());
    }

    #[test]
    fn iid_example_three() {
        let sd = ex3();
        let c = cfg(7, 100_000, 2, &[1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0]);
        let st = sample_path(&sd, &c, Execution::Sequential).unwrap();
        let sigma = (1.0f64 / 3.0 * 2.0 / 3.0 / 1e5).sqrt();
        for ch in &st.chains {
            assert!((ch.frequency(&[0]) - 1.0 / 3.0).abs() < 3.0 * sigma);
            assert!(ch.neg_log_r.abs() < 1e-12 && ch.birkhoff.abs() < 1e-12);
        }
    }

    #[test]
    fn example_one_stays_in_y() {
        let st = sample_path(&ex1(), &cfg(3, 20_000, 2, &[0.8, 0.2]), Execution::Sequential).unwrap();
        for ch in &st.chains {
            assert!(ch.stayed_in_y && ch.y_min >= -1.0 && ch.y_max <= 0.0);
        }
        assert!(st.birkhoff.mean <= -0.83 + st.birkhoff.ci95 + 1e-3, "{:?}", st.birkhoff);
        let fr = frequency_check(&st, &[1], 0.8);
        assert!(fr.pass, "{fr:?}");
        assert!(frequency_check(&st, &[0, 1], 1.0).pass);
    }

    #[test]
    fn single_step_law() {
        let sd = ex1();
        let st = sample_path(&sd, &cfg(11, 1, 4000, &[0.5, 0.5]), Execution::Sequential).unwrap();
        let f0 = st.freqs[0].mean;
        assert!((f0 - 0.2).abs() < 4.0 * (0.2f64 * 0.8 / 4000.0).sqrt(), "{f0}");
    }

    #[test]
    fn deterministic_across_execution() {
        let sd = ex1();
        let c = cfg(42, 2000, 8, &[0.4, 0.6]);
        let a = sample_path(&sd, &c, Execution::Sequential).unwrap();
        let b = sample_path(&sd, &c, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_step_negativity() {
        let sd = ex1();
        let col = Coloring::from_spectral(&sd).unwrap();
        for q in [[0.5, 0.5], [0.3, 0.7], [0.15, 0.85]] {
            let i = col.color(&q);
            let eps = inf_w(&sd, i, &q).lower;
            let v = v_full(&q, eps).unwrap();
            let mut prev: Option<(f64, usize)> = None;
            let mut checked = 0;
            run_chain(&sd, 5, 0, 5000, |st| {
                let s = rel_entropy(st.p, &q);
                if let Some((sp, sym)) = prev {
                    if sym == i {
                        assert!(sp + s <= v + 1e-9, "{sp} + {s} > {v}");
                        checked += 1;
                    }
                }
                prev = Some((s, st.symbol));
            })
            .unwrap();
            assert!(checked > 0);
        }
    }

    #[test]
    fn lebesgue_dimension() {
        let d = |p: Rat| {
            let f = MapSystem::new(vec![
                IntervalMap::affine(rat(1, 2), int(0)).unwrap(),
                IntervalMap::affine(rat(1, 2), rat(1, 2)).unwrap(),
            ])
            .unwrap();
            let q = Rat::from_integer(1.into()) - &p;
            let g = MapSystem::new(vec![IntervalMap::affine(p.clone(), int(0)).unwrap(), IntervalMap::affine(q, p).unwrap()])
                .unwrap();
            let pair = ConjugacyPair::new(f, g).unwrap();
            empirical_dimension(&pair, &DimConfig { seed: 1, steps: 5000, chains: 8 }, Execution::Sequential).unwrap()
        };
        assert!((d(rat(1, 2)).estimate.mean - 1.0).abs() < 1e-12);
        let h = -(0.3f64 * 0.3f64.ln() + 0.7 * 0.7f64.ln()) / std::f64::consts::LN_2;
        assert!((d(rat(3, 10)).estimate.mean - h).abs() < 0.02);
    }

}

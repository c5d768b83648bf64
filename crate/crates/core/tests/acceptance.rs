//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Run alone with `cargo test --test acceptance`.

use std::f64::consts::LN_2;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use conjkit::cli_io::examples::{EXAMPLE1, EXAMPLE2, EXAMPLE3, LEBESGUE, MINKOWSKI};
use conjkit::cli_io::{run_with, Config};
use conjkit::conjugacy::{mu_mass, phi_eval, regularity_check, ConjugacyPair, Num};
use conjkit::dim_certificate::{certify, delta_bounds, CertOptions, LipProfile, Route};
use conjkit::entropy_opt::{inf_w, rel_entropy, sup_entropy_region, v_full, w_of, Coloring, ProbVector, RegionSpec};
use conjkit::exact_maps::{growth_bounds_check, IntervalMap, MapSystem};
use conjkit::markov_sim::{empirical_dimension, log_ratio_stats, run_chain, sample_path, DimConfig, SimConfig};
use conjkit::par::Execution;
use conjkit::rat::{int, rat, to_f64, Rat};
use conjkit::spectral_y::SpectralData;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances and budgets, pinned.
const EX1_CLOSED_TOL: f64 = 1e-6;
const SUP_CLOSED_TOL: f64 = 0.02;
const BOUND_TOL: f64 = 1e-3;
const PHI_TOL: f64 = 1e-10;
const SIM_SE_WIDTHS: f64 = 4.0;
const FREQ_SIGMAS: f64 = 3.0;
const LEBESGUE_HALF_TOL: f64 = 0.01;
const LEBESGUE_03_TOL: f64 = 0.02;
const DIM_SLACK: f64 = 0.05;
const PROPERTY_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn cfg(text: &str) -> Config {
    Config::from_json(text).expect("fixture parses")
}

fn sd(text: &str) -> SpectralData {
    SpectralData::new(&cfg(text).g_system().unwrap()).unwrap()
}

fn within(budget: Duration, t: Duration) -> bool {
    t <= budget
}

fn c1_example1_exact() -> Outcome {
    let t = Instant::now();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_with(["conjkit", "analyze", "example1.json"], &mut out, &mut err);
    let text = String::from_utf8(out).unwrap();
    let want = [
        "alpha = -1\n",
        "beta = 0\n",
        "Fix(H_0) = -1/5\n",
        "Fix(H_1) = -1\n",
        "p_0 = G(Fix(H_0)) = (1/6, 5/6)\n",
        "p_1 = G(Fix(H_1)) = (0, 1)\n",
        "case = Case 2.2\n",
    ];
    let missing: Vec<&str> = want.iter().copied().filter(|w| !text.contains(w)).collect();
    let s = sd(EXAMPLE1);
    let exact = s.domain.alpha.as_rat() == Some(&rat(-1, 1))
        && s.domain.beta.as_rat() == Some(&rat(0, 1))
        && s.fix_h[0].as_rat() == Some(&rat(-1, 5))
        && s.fix_h[1].as_rat() == Some(&rat(-1, 1))
        && s.pvec[0].exact.as_deref() == Some(&[rat(1, 6), rat(5, 6)][..])
        && s.pvec[1].exact.as_deref() == Some(&[rat(0, 1), rat(1, 1)][..]);
    let dt = t.elapsed();
    outcome(
        code == 0 && missing.is_empty() && exact && within(Duration::from_secs(1), dt),
        format!("exit {code}, missing {missing:?}, exact {exact}, {dt:.2?}"),
    )
}

fn c2_entropy_constants() -> Outcome {
    let ln3 = 3f64.ln();
    let cases: [(&str, Vec<(usize, f64, f64)>, f64, f64, f64); 3] = [
        (EXAMPLE1, vec![(0, 0.8, 1.0)], -1.2 * LN_2, -0.83, EX1_CLOSED_TOL),
        (EXAMPLE2, vec![(0, 7.0 / 16.0, 0.5), (2, 7.0 / 16.0, 0.5)], ln3 - 8.0 / 3.0 * LN_2, -0.74, SUP_CLOSED_TOL),
        (EXAMPLE3, vec![(0, 0.0, 0.125), (3, 0.0, 0.125)], 4.0 / 3.0 * 0.75f64.ln(), -0.38, SUP_CLOSED_TOL),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, (text, boxes, closed, rounded, tol)) in cases.into_iter().enumerate() {
        let s = sd(text);
        let t = Instant::now();
        let sup = sup_entropy_region(&s, &RegionSpec::boxed(s.n, &boxes)).unwrap().value;
        let dt = t.elapsed();
        let ok = sup <= closed + EX1_CLOSED_TOL
            && (sup - closed).abs() <= tol
            && sup <= rounded
            && within(Duration::from_secs(10), dt);
        pass &= ok;
        parts.push(format!("ex{} sup {sup:.6} vs closed {closed:.6} (gap {:.2e}) {}", k + 1, (sup - closed).abs(), if ok { "ok" } else { "MISS" }));
    }
    outcome(pass, parts.join("; "))
}

fn c3_delta_checks() -> Outcome {
    let t = Instant::now();
    let tuples = [(2, 0.1, 0.83, 0.2), (3, 0.05, 0.74, 0.1), (4, 0.1, 0.38, 0.2)];
    let ok: Vec<bool> = tuples.iter().map(|&(n, e, e2, d)| delta_bounds(n, e, e2, Some(d)).final_ok == Some(true)).collect();
    let dt = t.elapsed();
    outcome(ok.iter().all(|&b| b) && within(Duration::from_millis(1), dt), format!("{ok:?} in {dt:.2?}"))
}

fn c4_certificates() -> Outcome {
    let expected = [0.9965, 0.848, 0.986];
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, text) in [EXAMPLE1, EXAMPLE2, EXAMPLE3].into_iter().enumerate() {
        let c = cfg(text);
        let s = SpectralData::new(&c.g_system().unwrap()).unwrap();
        let spec = c.bound.clone().unwrap();
        let r: Vec<f64> = spec.r.iter().map(|x| to_f64(&conjkit::rat::parse_rat(x).unwrap())).collect();
        let delta = to_f64(&conjkit::rat::parse_rat(spec.delta.as_deref().unwrap()).unwrap());
        let claim = to_f64(&conjkit::rat::parse_rat(spec.eps2.as_deref().unwrap()).unwrap());
        let region = conjkit::cli_io::config::region_from_list(s.n, spec.region.as_deref().unwrap()).unwrap();
        let opts = CertOptions {
            delta: Some(delta),
            route: Route::RegionDirect { region, eps2_claim: Some(claim) },
            grid: None,
            exec: Execution::Sequential,
        };
        let cert = certify(&LipProfile::new(r, c.eps).unwrap(), &s, &opts).unwrap();
        let ok = (cert.bound - expected[k]).abs() <= BOUND_TOL && cert.verdict.to_string() == "certified < 1";
        pass &= ok;
        parts.push(format!("ex{} {:.6} ({})", k + 1, cert.bound, cert.verdict));
    }
    outcome(pass, parts.join("; "))
}

fn random_word(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let len = rng.random_range(1..=10);
    (0..len).map(|_| rng.random_range(0..n)).collect()
}

fn c5_conjugacy_identities() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bad_end = 0;
    let mut bad_fe = 0;
    let mut worst_fe = 0.0f64;
    for text in [LEBESGUE, MINKOWSKI, EXAMPLE1, EXAMPLE2, EXAMPLE3] {
        let pair = cfg(text).pair().unwrap();
        let n = pair.n();
        for _ in 0..200 {
            let w = random_word(&mut rng, n);
            let target = pair.g.compose_word(&w).unwrap().at_zero();
            if pair.is_exact() {
                let x = pair.f.compose_word(&w).unwrap().at_zero();
                let v = phi_eval(&pair, &Num::Exact(x), PHI_TOL).unwrap();
                bad_end += usize::from(v.exact.as_ref() != Some(&target));
            } else {
                let x = pair.f.apply_word_f64(&w, 0.0);
                let v = phi_eval(&pair, &Num::Float(x), PHI_TOL).unwrap();
                bad_end += usize::from((v.value - to_f64(&target)).abs() > v.err + PHI_TOL);
            }
        }
        for _ in 0..100 {
            let x: f64 = rng.random();
            let i = rng.random_range(0..n);
            let lhs = phi_eval(&pair, &Num::Float(pair.f.map(i).apply_f64(x)), PHI_TOL).unwrap();
            let inner = phi_eval(&pair, &Num::Float(x), PHI_TOL).unwrap();
            let rhs = pair.g.map(i).apply_f64(inner.value);
            let res = (lhs.value - rhs).abs();
            worst_fe = worst_fe.max(res);
            bad_fe += usize::from(res > 2.0 * PHI_TOL);
        }
    }
    let dt = t.elapsed();
    outcome(
        bad_end == 0 && bad_fe == 0 && within(Duration::from_secs(30), dt),
        format!("endpoint mismatches {bad_end}/1000, residual violations {bad_fe}/500 (max {worst_fe:.2e}), {dt:.2?}"),
    )
}

fn c6_growth() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, text) in [EXAMPLE1, EXAMPLE2].into_iter().enumerate() {
        let g = cfg(text).g_system().unwrap();
        let rep = growth_bounds_check(&g, 40).unwrap();
        let admitted = rep.per_depth.iter().all(|d| rep.admits(d.depth, &d.min_width) && rep.admits(d.depth, &d.max_width));
        let ok = rep.depth == 40 && rep.violations.is_empty() && admitted;
        pass &= ok;
        parts.push(format!("ex{}: c = {:.4}, C = {:.4}, violations {}", k + 1, rep.c_lower, rep.c_upper, rep.violations.len()));
    }
    outcome(pass, parts.join("; "))
}

fn c7_simulation() -> Outcome {
    let t = Instant::now();
    let s = sd(EXAMPLE3);
    let q = ProbVector::uniform(4);
    let sim = SimConfig::new(7, 100_000, 16, q.clone()).unwrap();
    let path = sample_path(&s, &sim, Execution::default()).unwrap();
    let derived = rel_entropy(&[1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0], &q);
    let se = path.birkhoff.std_err();
    let mean_ok = (path.birkhoff.mean - derived).abs() <= SIM_SE_WIDTHS * se + PROPERTY_TOL && (derived + 0.056633).abs() < 1e-6;
    let agree = log_ratio_stats(&path).agree(2.0);
    let f0 = &path.freqs[0];
    let sigma = (1.0 / 3.0 * 2.0 / 3.0 / (sim.steps as f64 * sim.chains as f64)).sqrt();
    let freq_ok = (f0.mean - 1.0 / 3.0).abs() <= FREQ_SIGMAS * sigma;
    let dt = t.elapsed();
    outcome(
        mean_ok && agree && freq_ok && within(Duration::from_secs(60), dt),
        format!(
            "birkhoff {:.6} (derived {derived:.6}), -log R_n/n {:.6}, freq0 {:.5} (3 sigma {:.5}), {dt:.2?}",
            path.birkhoff.mean,
            path.neg_log_r.mean,
            f0.mean,
            FREQ_SIGMAS * sigma
        ),
    )
}

fn dyadic() -> MapSystem {
    MapSystem::new(vec![IntervalMap::affine(rat(1, 2), int(0)).unwrap(), IntervalMap::affine(rat(1, 2), rat(1, 2)).unwrap()]).unwrap()
}

fn lebesgue_pair(p: Rat) -> ConjugacyPair {
    let q = Rat::from_integer(1.into()) - &p;
    let g = MapSystem::new(vec![IntervalMap::affine(p.clone(), int(0)).unwrap(), IntervalMap::affine(q, p).unwrap()]).unwrap();
    ConjugacyPair::new(dyadic(), g).unwrap()
}

fn c8_dimension() -> Outcome {
    let dc = DimConfig { seed: 8, steps: 20_000, chains: 8 };
    let exec = Execution::default();
    let half = empirical_dimension(&lebesgue_pair(rat(1, 2)), &dc, exec).unwrap().estimate.mean;
    let p3 = empirical_dimension(&lebesgue_pair(rat(3, 10)), &dc, exec).unwrap().estimate.mean;
    let h = -(0.3f64 * 0.3f64.ln() + 0.7 * 0.7f64.ln()) / LN_2;
    let c = cfg(EXAMPLE1);
    let pair = c.pair().unwrap();
    let ex1 = empirical_dimension(&pair, &dc, exec).unwrap().estimate.mean;
    let s = SpectralData::new(&pair.g).unwrap();
    let opts = CertOptions {
        delta: Some(0.2),
        route: Route::RegionDirect { region: RegionSpec::boxed(2, &[(0, 0.8, 1.0)]), eps2_claim: Some(0.83) },
        grid: None,
        exec,
    };
    let profile = LipProfile::from_system(&pair.f, 0.1).unwrap();
    let cert = certify(&profile, &s, &opts).unwrap();
    let ok = (half - 1.0).abs() <= LEBESGUE_HALF_TOL
        && (p3 - h).abs() <= LEBESGUE_03_TOL
        && (p3 - 0.881).abs() <= LEBESGUE_03_TOL
        && cert.verdict.is_certified()
        && ex1 <= cert.bound + DIM_SLACK;
    outcome(
        ok,
        format!("lebesgue 1/2: {half:.4}; lebesgue 3/10: {p3:.4} (oracle {h:.4}); example 1: {ex1:.4} vs bound {:.4}", cert.bound),
    )
}

fn c9_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations: Vec<String> = Vec::new();
    let mut count = 0usize;
    let mut check = |ok: bool, what: &str, v: &mut Vec<String>| {
        count += 1;
        if !ok && v.len() < 5 {
            v.push(what.to_string());
        }
    };
    for text in [EXAMPLE1, EXAMPLE2, EXAMPLE3, MINKOWSKI, LEBESGUE] {
        let c = cfg(text);
        let s = sd(text);
        for k in 0..=20 {
            // Exact partition of unity and H-invariance at rational points of Y.
            if let (Some(ar), Some(br)) = (s.domain.alpha.as_rat(), s.domain.beta.as_rat()) {
                let y = ar + (br - ar) * rat(k, 20);
                let total: Rat = s.g_vec_rat(&y).iter().sum();
                check(total == rat(1, 1), "partition of unity", &mut violations);
                for i in 0..s.n {
                    check(s.domain.contains_rat(&s.h_rat(i, &y)), "H-invariance", &mut violations);
                }
            } else {
                let t0 = s.domain.chart_bounds();
                let y = s.domain.chart.from_chart(t0.0 + (t0.1 - t0.0) * k as f64 / 20.0);
                let total: f64 = s.g_vec_f64(y).iter().sum();
                check((total - 1.0).abs() <= PROPERTY_TOL, "partition of unity (float)", &mut violations);
                for i in 0..s.n {
                    check(s.domain.contains_f64(s.h_f64(i, y), PROPERTY_TOL), "H-invariance (float)", &mut violations);
                }
            }
        }
        // W vanishes at (p_i, Fix(H_i)).
        for i in 0..s.n {
            let fix = s.fix_h[i].to_f64();
            if fix.is_finite() {
                check(w_of(&s, i, &s.pvec[i].approx, fix) <= PROPERTY_TOL, "W zero at (p_i, Fix)", &mut violations);
            }
        }
        // Mass additivity on exact pairs.
        let pair = c.pair().unwrap();
        for _ in 0..50 {
            let w = random_word(&mut rng, pair.n());
            let whole = mu_mass(&pair, &w).unwrap();
            let parts: Rat = (0..pair.n())
                .map(|i| {
                    let mut v = w.clone();
                    v.push(i);
                    mu_mass(&pair, &v).unwrap()
                })
                .sum();
            check(whole == parts, "mass additivity", &mut violations);
        }
    }
    // V is negative and non-increasing in eps.
    for _ in 0..200 {
        let n = rng.random_range(2..=4);
        let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
        let tot: f64 = q.iter().sum();
        q.iter_mut().for_each(|x| *x /= tot);
        let e1 = rng.random::<f64>() * 0.2 + 0.01;
        let e2 = e1 + rng.random::<f64>() * 0.1;
        if let (Ok(v1), Ok(v2)) = (v_full(&q, e1), v_full(&q, e2)) {
            check(v1 < 0.0 && v2 <= v1 + PROPERTY_TOL, "V negativity/monotonicity", &mut violations);
        }
    }
    // Two-step classify-multiple inequality along an Example 1 chain.
    let s1 = sd(EXAMPLE1);
    let col = Coloring::from_spectral(&s1).unwrap();
    for q in [[0.5, 0.5], [0.3, 0.7], [0.15, 0.85], [0.9, 0.1]] {
        let i = col.color(&q);
        let eps = inf_w(&s1, i, &q).lower;
        let v = v_full(&q, eps).unwrap();
        let mut prev: Option<(f64, usize)> = None;
        let mut local = Vec::new();
        run_chain(&s1, 9, 0, 5000, |st| {
            let se = rel_entropy(st.p, &q);
            if let Some((sp, sym)) = prev {
                if sym == i {
                    local.push(sp + se <= v + 1e-9);
                }
            }
            prev = Some((se, st.symbol));
        })
        .unwrap();
        for ok in local {
            check(ok, "two-step classify-multiple", &mut violations);
        }
    }
    // Weak regularity on a grid, with the g-system growth constants.
    let g1 = cfg(EXAMPLE1).g_system().unwrap();
    let rep = growth_bounds_check(&g1, 12).unwrap();
    let pair = ConjugacyPair::new(g1.clone(), g1).unwrap();
    let reg = regularity_check(&pair, rep.c_lower, rep.c_upper, 8, 1e-12).unwrap();
    check(reg.violations.is_empty() && reg.checked == 64, "weak regularity", &mut violations);
    outcome(violations.is_empty(), format!("{count} checks, violations {violations:?}"))
}

fn main() -> ExitCode {
    // Honour the libtest flags cargo passes, e.g. `--list`.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("example 1 exactness", c1_example1_exact),
        ("entropy constants", c2_entropy_constants),
        ("delta checks", c3_delta_checks),
        ("certificates", c4_certificates),
        ("conjugacy identities", c5_conjugacy_identities),
        ("growth bounds", c6_growth),
        ("simulation statistics", c7_simulation),
        ("dimension sanity", c8_dimension),
        ("property suites", c9_properties),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {} ({name}): {} [{:.2?}]", k + 1, o.detail, t.elapsed());
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

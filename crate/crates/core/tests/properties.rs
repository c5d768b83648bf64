//! Randomized invariants across modules.

use conjkit::cli_io::examples::{EXAMPLE1, EXAMPLE2, LEBESGUE, MINKOWSKI};
use conjkit::cli_io::{render_svg, Config, MapRecord};
use conjkit::conjugacy::{mu_mass, phi_eval, Num, PhiPoint, PhiSample};
use conjkit::dim_certificate::{delta_bounds, s_upper, similarity_exponent};
use conjkit::entropy_opt::{rel_entropy, v_full};
use conjkit::par::{map_range, Execution};
use conjkit::rat::{format_rat, parse_rat, rat, Rat};
use conjkit::spectral_y::SpectralData;
use proptest::prelude::*;

fn sd(text: &str) -> SpectralData {
    SpectralData::new(&Config::from_json(text).unwrap().g_system().unwrap()).unwrap()
}

fn prob(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rational_literals_round_trip(n in -10_000i64..10_000, d in 1i64..10_000) {
        let x = rat(n, d);
        prop_assert_eq!(parse_rat(&format_rat(&x)).unwrap(), x);
    }

    #[test]
    fn partition_of_unity_exact(k in 0i64..=1000) {
        for text in [EXAMPLE1, EXAMPLE2] {
            let s = sd(text);
            let (a, b) = (s.domain.alpha.as_rat().unwrap().clone(), s.domain.beta.as_rat().unwrap().clone());
            let y = &a + (&b - &a) * rat(k, 1000);
            let total: Rat = s.g_vec_rat(&y).iter().sum();
            prop_assert_eq!(total, rat(1, 1));
            for i in 0..s.n {
                prop_assert!(s.domain.contains_rat(&s.h_rat(i, &y)));
            }
        }
    }

    #[test]
    fn gibbs_and_v(p in prob(3), q in prob(3), e1 in 0.01f64..0.2, de in 0.0f64..0.1) {
        prop_assert!(rel_entropy(&p, &q) <= 1e-15);
        let v1 = v_full(&q, e1).unwrap();
        let v2 = v_full(&q, e1 + de).unwrap();
        prop_assert!(v1 < 0.0);
        prop_assert!(v2 <= v1 + 1e-12);
    }

    #[test]
    fn similarity_residual(r in prop::collection::vec(0.3f64..0.9, 2..5)) {
        prop_assume!(r.iter().sum::<f64>() >= 1.0);
        let s = similarity_exponent(&r).unwrap();
        prop_assert!(s >= 1.0);
        prop_assert!((r.iter().map(|x| x.powf(s)).sum::<f64>() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn delta_inversion(n in 2usize..6, eps in 0.02f64..0.24, eps2 in 0.05f64..1.0) {
        let b = delta_bounds(n, eps, eps2, None);
        let k = eps2 / (1.0 / eps).ln();
        prop_assert!(s_upper(n, b.final_delta) <= 1.0 + k + 1e-12);
        prop_assert_eq!(delta_bounds(n, eps, eps2, Some(b.final_delta + 1e-6)).final_ok, Some(false));
    }

    #[test]
    fn exponent_grows_with_total_mass(r0 in 0.45f64..0.6, r1 in 0.55f64..0.6, bump in 0.01f64..0.2) {
        let a = similarity_exponent(&[r0, r1]).unwrap();
        let b = similarity_exponent(&[r0 + bump, r1]).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn phi_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let pair = Config::from_json(EXAMPLE1).unwrap().pair().unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let u = phi_eval(&pair, &Num::Float(lo), 1e-10).unwrap();
        let v = phi_eval(&pair, &Num::Float(hi), 1e-10).unwrap();
        prop_assert!(u.lower() <= v.upper());
    }

    #[test]
    fn mass_is_additive(word in prop::collection::vec(0usize..2, 0..12)) {
        for text in [LEBESGUE, MINKOWSKI] {
            let pair = Config::from_json(text).unwrap().pair().unwrap();
            let whole = mu_mass(&pair, &word).unwrap();
            let mut parts = Rat::from_integer(0.into());
            for i in 0..2 {
                let mut w = word.clone();
                w.push(i);
                parts += mu_mass(&pair, &w).unwrap();
            }
            prop_assert_eq!(whole, parts);
        }
    }

    #[test]
    fn affine_config_round_trip(n in 1i64..50, d in 51i64..100) {
        let s = format!("{n}/{d}");
        let rest = format!("{}/{d}", d - n);
        let rec = vec![
            MapRecord::Affine { slope: s.clone(), intercept: "0".into() },
            MapRecord::Affine { slope: rest, intercept: s },
        ];
        let cfg = Config { name: "t".into(), g: rec.clone(), f: rec, tol: 1e-12, seed: 0, eps: 0.1, bound: None };
        let back = Config::from_json(&cfg.to_json()).unwrap();
        for (a, b) in cfg.g.iter().zip(&back.g) {
            prop_assert_eq!(a.rationals().unwrap(), b.rationals().unwrap());
        }
        prop_assert!(back.pair().is_ok());
    }

    #[test]
    fn svg_and_csv_are_deterministic(mut ys in prop::collection::vec(0.0f64..1.0, 1..40), prec in 1usize..15) {
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        let m = ys.len() + 1;
        let mut pts: Vec<PhiPoint> = ys.iter().enumerate().map(|(k, &y)| PhiPoint { x: k as f64 / m as f64, phi: y, err: 0.0 }).collect();
        pts.push(PhiPoint { x: 1.0, phi: 1.0, err: 0.0 });
        let sample = PhiSample { points: pts };
        prop_assert_eq!(render_svg(&sample).unwrap(), render_svg(&sample).unwrap());
        let csv = sample.to_csv(prec);
        let mut lines = csv.lines();
        prop_assert_eq!(lines.next(), Some("x,phi,err"));
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            prop_assert_eq!(cols.len(), 3);
            for c in &cols[..2] {
                prop_assert_eq!(c.split('.').nth(1).map(str::len), Some(prec));
            }
        }
    }

    #[test]
    fn parallel_matches_sequential(n in 0usize..500) {
        let f = |i: usize| (i as f64).sqrt().sin();
        prop_assert_eq!(map_range(Execution::Sequential, n, f), map_range(Execution::Parallel, n, f));
    }
}

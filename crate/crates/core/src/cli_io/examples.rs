//! Recomputes every constant of the three worked examples and compares it with
//! the published value.

use std::f64::consts::LN_2;
use std::fmt;

use serde::Serialize;

use super::config::{region_from_list, Config};
use crate::dim_certificate::{certify, delta_bounds, s_upper, CertOptions, LipProfile, Route};
use crate::entropy_opt::sup_entropy_region;
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::rat::{format_rat, parse_rat, rat, to_f64, Rat};
use crate::spectral_y::{CaseTag, SpectralData};

/// Float quantities compared against a closed form.
pub const CLOSED_FORM_TOL: f64 = 1e-6;
/// Final bounds compared against the value derived from the displayed constants.
pub const BOUND_TOL: f64 = 1e-3;

pub const EXAMPLE1: &str = include_str!("../../fixtures/example1.json");
pub const EXAMPLE2: &str = include_str!("../../fixtures/example2.json");
pub const EXAMPLE3: &str = include_str!("../../fixtures/example3.json");
pub const LEBESGUE: &str = include_str!("../../fixtures/lebesgue.json");
pub const MINKOWSKI: &str = include_str!("../../fixtures/minkowski.json");

/// Bundled config by file stem (`example1`, `lebesgue`, ...).
pub fn bundled(stem: &str) -> Option<&'static str> {
    Some(match stem {
        "example1" => EXAMPLE1,
        "example2" => EXAMPLE2,
        "example3" => EXAMPLE3,
        "lebesgue" => LEBESGUE,
        "minkowski" => MINKOWSKI,
        _ => return None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub quantity: String,
    pub expected: String,
    pub computed: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleResult {
    pub id: u8,
    pub checks: Vec<Check>,
}

impl ExampleResult {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

impl fmt::Display for ExampleResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.pass { "ok  " } else { "DIFF" };
            writeln!(f, "  {tag} {}: expected {}, computed {}", c.quantity, c.expected, c.computed)?;
        }
        let verdict = if self.pass() { "PASS" } else { "FAIL" };
        write!(f, "{verdict} example {} ({}/{} checks)", self.id, self.checks.iter().filter(|c| c.pass).count(), self.checks.len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    One,
    Two,
    Three,
    All,
}

impl std::str::FromStr for Which {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(Which::One),
            "2" => Ok(Which::Two),
            "3" => Ok(Which::Three),
            "all" => Ok(Which::All),
            other => Err(Error::Parse(format!("--which {other:?}: expected 1, 2, 3 or all"))),
        }
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, quantity: impl Into<String>, expected: impl Into<String>, computed: impl Into<String>, pass: bool) {
        self.0.push(Check { quantity: quantity.into(), expected: expected.into(), computed: computed.into(), pass });
    }

    fn exact(&mut self, quantity: impl Into<String>, expected: &Rat, computed: Option<&Rat>) {
        let shown = computed.map(format_rat).unwrap_or_else(|| "irrational or infinite".into());
        self.push(quantity, format_rat(expected), shown, computed == Some(expected));
    }

    fn exact_vec(&mut self, quantity: impl Into<String>, expected: &[Rat], computed: Option<&Vec<Rat>>) {
        let show = |v: &[Rat]| format!("({})", v.iter().map(format_rat).collect::<Vec<_>>().join(", "));
        let shown = computed.map(|v| show(v)).unwrap_or_else(|| "not exact".into());
        self.push(quantity, show(expected), shown, computed.map(|v| v.as_slice()) == Some(expected));
    }

    fn claim(&mut self, quantity: impl Into<String>, value: f64, holds: bool, claim: &str) {
        self.push(quantity, claim.to_string(), format!("{value:.6}"), holds);
    }
}

fn spectral(cfg: &Config) -> Result<SpectralData> {
    SpectralData::new(&cfg.g_system()?)
}

/// Exact formula checks `G_i(y)` and `H_i(y)` at a few rational points of `Y`.
fn formulas(ck: &mut Checks, sd: &SpectralData, ys: &[Rat], g: &[fn(&Rat) -> Rat], h: &[fn(&Rat) -> Rat]) {
    for y in ys {
        for (i, f) in g.iter().enumerate() {
            ck.exact(format!("G_{i}({})", format_rat(y)), &f(y), Some(&sd.g_rat(i, y)));
        }
        for (i, f) in h.iter().enumerate() {
            ck.exact(format!("H_{i}({})", format_rat(y)), &f(y), Some(&sd.h_rat(i, y)));
        }
    }
}

/// Region supremum, δ checks and the final certificate shared by all examples.
fn region_and_bound(ck: &mut Checks, cfg: &Config, sd: &SpectralData, closed: f64, closed_text: &str) -> Result<()> {
    let spec = cfg.bound.clone().ok_or_else(|| Error::Parse("fixture lacks a bound section".into()))?;
    let region = region_from_list(sd.n, spec.region.as_deref().unwrap_or(&[]))?;
    let claim = to_f64(&parse_rat(spec.eps2.as_deref().unwrap_or("0"))?);
    let delta = to_f64(&parse_rat(spec.delta.as_deref().unwrap_or("0"))?);
    let sup = sup_entropy_region(sd, &region)?;
    ck.claim(
        "region entropy supremum vs closed form",
        sup.value,
        sup.value <= closed + CLOSED_FORM_TOL,
        &format!("<= {closed_text} = {closed:.6}"),
    );
    ck.claim("region entropy supremum vs rounded constant", sup.value, sup.value <= -claim, &format!("<= -{claim}"));
    let n = sd.n;
    let l = (1.0 / cfg.eps).ln();
    let db = delta_bounds(n, cfg.eps, claim, Some(delta));
    ck.push(
        format!("final-delta condition (N={n}, eps={}, eps2={claim}, delta={delta})", cfg.eps),
        "holds",
        format!("{} (delta max {:.6})", if db.final_ok == Some(true) { "holds" } else { "fails" }, db.final_delta),
        db.final_ok == Some(true),
    );
    let r_vals: Vec<f64> = spec.r.iter().map(|x| parse_rat(x).map(|v| to_f64(&v))).collect::<Result<_>>()?;
    let profile = LipProfile::new(r_vals, cfg.eps)?;
    let opts = CertOptions {
        delta: Some(delta),
        route: Route::RegionDirect { region, eps2_claim: Some(claim) },
        grid: None,
        exec: Execution::Sequential,
    };
    let cert = certify(&profile, sd, &opts)?;
    let expected = s_upper(n, delta) - claim / l;
    ck.push(
        "final bound",
        format!("{expected:.6} +- {BOUND_TOL}, < 1"),
        format!("{:.6} ({})", cert.bound, cert.verdict),
        (cert.bound - expected).abs() <= BOUND_TOL && cert.bound < 1.0 && cert.verdict.is_certified(),
    );
    Ok(())
}

fn example1() -> Result<ExampleResult> {
    let cfg = Config::from_json(EXAMPLE1)?;
    let sd = spectral(&cfg)?;
    let mut ck = Checks(Vec::new());
    ck.exact("alpha", &rat(-1, 1), sd.domain.alpha.as_rat());
    ck.exact("beta", &rat(0, 1), sd.domain.beta.as_rat());
    let one = || rat(1, 1);
    formulas(
        &mut ck,
        &sd,
        &[rat(-1, 1), rat(-1, 2), rat(0, 1)],
        &[|y| (y + rat(1, 1)) / (y + rat(5, 1)), |y| rat(4, 1) / (y + rat(5, 1))],
        &[|y| (y - rat(1, 1)) / rat(6, 1), |y| (rat(3, 1) * y - rat(1, 1)) / (y + rat(5, 1))],
    );
    ck.exact("sup G_0", &rat(1, 5), sd.g_extremes(0).sup_exact.as_ref());
    ck.exact("Fix(H_0)", &rat(-1, 5), sd.fix_h[0].as_rat());
    ck.exact("Fix(H_1)", &rat(-1, 1), sd.fix_h[1].as_rat());
    ck.exact_vec("G(Fix(H_0))", &[rat(1, 6), rat(5, 6)], sd.pvec[0].exact.as_ref());
    ck.exact_vec("G(Fix(H_1))", &[rat(0, 1), one()], sd.pvec[1].exact.as_ref());
    ck.push("case", "Case 2.2", sd.case_tag.to_string(), sd.case_tag == CaseTag::Case2_2);
    let k = 0.83 / 10f64.ln();
    ck.claim("0.83 / log 10", k, k >= 0.36, ">= 0.36");
    let su = s_upper(2, 0.2);
    ck.claim("log 2 / (log 2 - log 1.2)", su, su <= 1.357, "<= 1.357");
    region_and_bound(&mut ck, &cfg, &sd, -1.2 * LN_2, "-(6/5) log 2")?;
    Ok(ExampleResult { id: 1, checks: ck.0 })
}

fn example2() -> Result<ExampleResult> {
    let cfg = Config::from_json(EXAMPLE2)?;
    let sd = spectral(&cfg)?;
    let mut ck = Checks(Vec::new());
    ck.exact("alpha", &rat(-1, 6), sd.domain.alpha.as_rat());
    ck.exact("beta", &rat(0, 1), sd.domain.beta.as_rat());
    formulas(
        &mut ck,
        &sd,
        &[rat(-1, 6), rat(-1, 12), rat(0, 1)],
        &[
            |y| (y + rat(1, 1)) / (y + rat(7, 1)),
            |y| rat(35, 1) * (y + rat(1, 1)) / ((rat(6, 1) * y + rat(7, 1)) * (y + rat(7, 1))),
            |y| rat(1, 1) / (rat(6, 1) * y + rat(7, 1)),
        ],
        &[
            |y| (y - rat(1, 1)) / rat(8, 1),
            |y| rat(5, 1) * y / (y + rat(7, 1)),
            |y| -rat(1, 1) / (rat(6, 1) * y + rat(7, 1)),
        ],
    );
    ck.exact("sup G_0", &rat(1, 7), sd.g_extremes(0).sup_exact.as_ref());
    ck.exact("sup G_2", &rat(1, 6), sd.g_extremes(2).sup_exact.as_ref());
    ck.exact("Fix(H_0)", &rat(-1, 7), sd.fix_h[0].as_rat());
    ck.exact("Fix(H_1)", &rat(0, 1), sd.fix_h[1].as_rat());
    ck.exact("Fix(H_2)", &rat(-1, 6), sd.fix_h[2].as_rat());
    ck.exact_vec("G(Fix(H_0))", &[rat(1, 8), rat(245, 344), rat(7, 43)], sd.pvec[0].exact.as_ref());
    ck.exact_vec("G(Fix(H_1))", &[rat(1, 7), rat(5, 7), rat(1, 7)], sd.pvec[1].exact.as_ref());
    ck.exact_vec("G(Fix(H_2))", &[rat(5, 41), rat(175, 246), rat(1, 6)], sd.pvec[2].exact.as_ref());
    let k = 0.74 / 20f64.ln();
    ck.claim("0.74 / log 20", k, k > 0.24, "> 0.24");
    let su = s_upper(3, 0.1);
    ck.claim("log 3 / (log 3 - log 1.1)", su, su < 1.1, "< 1.1");
    let closed = 3f64.ln() - 8.0 / 3.0 * LN_2;
    region_and_bound(&mut ck, &cfg, &sd, closed, "log 3 - (8/3) log 2")?;
    Ok(ExampleResult { id: 2, checks: ck.0 })
}

fn example3() -> Result<ExampleResult> {
    let cfg = Config::from_json(EXAMPLE3)?;
    let sd = spectral(&cfg)?;
    let mut ck = Checks(Vec::new());
    let zero = rat(0, 1);
    ck.exact("alpha", &zero, sd.domain.alpha.as_rat());
    ck.exact("beta", &zero, sd.domain.beta.as_rat());
    ck.exact_vec("G(0)", &[rat(1, 3), rat(1, 6), rat(1, 6), rat(1, 3)], Some(&sd.g_vec_rat(&zero)));
    let k = 0.38 / 10f64.ln();
    ck.claim("0.38 / log 10", k, k > 0.165, "> 0.165");
    let su = s_upper(4, 0.2);
    ck.claim("log 4 / (log 4 - log 1.2)", su, su > 1.15 && su < 1.152, "in (1.15, 1.152)");
    let closed = 4.0 / 3.0 * (0.75f64).ln();
    region_and_bound(&mut ck, &cfg, &sd, closed, "(4/3) log(3/4)")?;
    Ok(ExampleResult { id: 3, checks: ck.0 })
}

pub fn reproduce_examples(which: Which) -> Result<Vec<ExampleResult>> {
    match which {
        Which::One => Ok(vec![example1()?]),
        Which::Two => Ok(vec![example2()?]),
        Which::Three => Ok(vec![example3()?]),
        Which::All => Ok(vec![example1()?, example2()?, example3()?]),
    }
}

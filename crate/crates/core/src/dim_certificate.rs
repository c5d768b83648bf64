//! Upper bounds `dim_H μ_φ <= s − ε₂ / log(1/ε)` and the checks behind them.
//!
//! `s` solves `Σ r_i^s = 1` for the Lipschitz profile `r` of the `f`-system.
//! `ε₂` bounds the long-run relative entropy `(1/n) Σ s_N(p_j | q̃)` away from
//! zero at `q̃ = (r_i^s)`, and comes from one of two routes:
//!
//! * structural: the `W` / `V` / coloring / frequency constants, by case;
//! * region-direct: a supremum of `s_N(G(y) | q)` over `y ∈ Y` and a box of `q`
//!   that contains `q̃`, which bounds every step at once.

use std::fmt;

use serde::Serialize;

use crate::entropy_opt::{
    default_grid, eps1_tilde, inf_w_region_adaptive, l1, simplex_grid, sup_entropy_region, v_global, v_max_over_region,
    RegionSpec,
};
use crate::error::{Error, Result};
use crate::exact_maps::MapSystem;
use crate::par::Execution;
use crate::spectral_y::{CaseTag, SpectralData};

/// Largest grid the certified `V` bound will enumerate.
pub const MAX_GRID_POINTS: usize = 400_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipProfile {
    pub r: Vec<f64>,
    pub eps: f64,
}

impl LipProfile {
    pub fn new(r: Vec<f64>, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::Domain { value: format!("eps = {eps} (need 0 < eps < 1/2)") });
        }
        if let Some(bad) = r.iter().find(|&&x| !(x >= eps && x <= 1.0 - eps)) {
            return Err(Error::Domain { value: format!("r_i = {bad} outside [eps, 1 - eps]") });
        }
        if r.iter().sum::<f64>() < 1.0 {
            return Err(Error::Domain { value: format!("sum of r = {} < 1", r.iter().sum::<f64>()) });
        }
        Ok(LipProfile { r, eps })
    }

    /// Lipschitz constants of the system's maps (upper bounds for Möbius maps).
    pub fn from_system(f: &MapSystem, eps: f64) -> Result<Self> {
        LipProfile::new(f.lips_f64(), eps)
    }

    pub fn sum(&self) -> f64 {
        self.r.iter().sum()
    }
}

/// The unique `s >= 1` with `Σ r_i^s = 1`.
pub fn similarity_exponent(r: &[f64]) -> Result<f64> {
    if r.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::Domain { value: format!("{r:?} (need 0 < r_i < 1)") });
    }
    let f = |s: f64| r.iter().map(|x| x.powf(s)).sum::<f64>() - 1.0;
    if f(1.0) < 0.0 {
        return Err(Error::Domain { value: format!("sum of r = {} < 1, no s >= 1", f(1.0) + 1.0) });
    }
    let mut hi = 2.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 1.0;
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `log N / log(N / (1 + δ))`, the largest `s` over profiles with `Σ r_i <= 1 + δ`.
pub fn s_upper(n: usize, delta: f64) -> f64 {
    let ln_n = (n as f64).ln();
    ln_n / (ln_n - delta.ln_1p())
}

/// Largest `δ` with `log N / log(N/(1+δ)) <= 1 + k`, i.e. `N^{k/(1+k)} − 1`.
fn invert(n: usize, k: f64) -> f64 {
    (n as f64).powf(k / (1.0 + k)) - 1.0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaBounds {
    /// Supremum of `δ` with `log N / log(N/(1+δ)) < 1 + ε₂ / log(1/ε)`.
    pub final_delta: f64,
    /// Largest `δ` with `log N / log(N/(1+δ)) <= 1 + log(1 + ε/2) / log(1/ε)`.
    pub delta_2: f64,
    /// Largest `δ` keeping `q̃` inside `{q_i >= ε/2}`: exponent gap `log 2 / log(1/ε)`.
    pub interior: f64,
    pub final_ok: Option<bool>,
    pub delta_2_ok: Option<bool>,
}

pub fn delta_bounds(n: usize, eps: f64, eps2: f64, delta: Option<f64>) -> DeltaBounds {
    let l = (1.0 / eps).ln();
    let k_final = eps2 / l;
    let k_2 = (eps / 2.0).ln_1p() / l;
    DeltaBounds {
        final_delta: invert(n, k_final),
        delta_2: invert(n, k_2),
        interior: invert(n, std::f64::consts::LN_2 / l),
        final_ok: delta.map(|d| s_upper(n, d) < 1.0 + k_final),
        delta_2_ok: delta.map(|d| s_upper(n, d) <= 1.0 + k_2),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TheoremKind {
    /// At least two distinct vectors `𝔭_i`.
    T1,
    /// All `𝔭_i` equal; needs `‖r − 𝔭₀‖ >= ε`.
    T2,
    /// `ε₂` from a region-restricted entropy supremum.
    RegionDirect,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Verdict {
    Certified,
    NotApplicable(String),
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Certified => f.write_str("certified < 1"),
            Verdict::NotApplicable(why) => write!(f, "not applicable: {why}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Route {
    Structural,
    /// `eps2_claim`, when given, is accepted only if the computed supremum is at most `−eps2_claim`.
    RegionDirect { region: RegionSpec, eps2_claim: Option<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertOptions {
    /// The `δ` budget; defaults to `Σ r_i − 1`.
    pub delta: Option<f64>,
    pub route: Route,
    /// Simplex grid resolution for the structural constants.
    pub grid: Option<usize>,
    pub exec: Execution,
}

impl Default for CertOptions {
    fn default() -> Self {
        CertOptions { delta: None, route: Route::Structural, grid: None, exec: Execution::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub theorem: TheoremKind,
    pub route: String,
    pub case_tag: String,
    pub n: usize,
    pub eps: f64,
    pub r: Vec<f64>,
    pub s: f64,
    /// `δ` used for the profile family.
    pub delta: f64,
    /// `Σ r_i − 1`, the least admissible `δ`.
    pub delta_required: f64,
    pub delta_bounds: DeltaBounds,
    pub eps2: f64,
    pub q_tilde: Vec<f64>,
    /// `log N / log(N/(1+δ)) − ε₂ / log(1/ε)`, valid for every profile with `Σ r_i <= 1 + δ`.
    pub bound: f64,
    /// `s − ε₂ / log(1/ε)` for this profile.
    pub bound_at_r: f64,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl Certificate {
    fn blank(theorem: TheoremKind, route: &Route, sd: &SpectralData, p: &LipProfile) -> Self {
        Certificate {
            theorem,
            route: match route {
                Route::Structural => "structural".into(),
                Route::RegionDirect { .. } => "region-direct".into(),
            },
            case_tag: sd.case_tag.to_string(),
            n: sd.n,
            eps: p.eps,
            r: p.r.clone(),
            s: f64::NAN,
            delta: f64::NAN,
            delta_required: p.sum() - 1.0,
            delta_bounds: delta_bounds(sd.n, p.eps, f64::NAN, None),
            eps2: f64::NAN,
            q_tilde: Vec::new(),
            bound: f64::NAN,
            bound_at_r: f64::NAN,
            verdict: Verdict::NotApplicable("not evaluated".into()),
            notes: Vec::new(),
        }
    }

    fn reject(mut self, why: impl Into<String>) -> Self {
        self.verdict = Verdict::NotApplicable(why.into());
        self
    }

    pub fn to_report(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("theorem      {:?} ({} route, {})\n", self.theorem, self.route, self.case_tag));
        s.push_str(&format!("eps          {}\n", self.eps));
        s.push_str(&format!("r            {:?}\n", self.r));
        s.push_str(&format!("s            {:.9}\n", self.s));
        s.push_str(&format!("delta        {:.6} (required {:.6}, max {:.6})\n", self.delta, self.delta_required, self.delta_bounds.final_delta));
        s.push_str(&format!("eps2         {:.6}\n", self.eps2));
        s.push_str(&format!("q~           {:?}\n", self.q_tilde.iter().map(|x| (x * 1e6).round() / 1e6).collect::<Vec<_>>()));
        s.push_str(&format!("bound        {:.6}\n", self.bound));
        s.push_str(&format!("bound at r   {:.6}\n", self.bound_at_r));
        s.push_str(&format!("verdict      {}\n", self.verdict));
        for n in &self.notes {
            s.push_str(&format!("note         {n}\n"));
        }
        s
    }
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Upper bound for `max_{q ∈ region} V(q; ε)`: the certified grid bound when
/// affordable, capped by the global value.
fn v_upper(n: usize, eps: f64, region: &RegionSpec, exec: Execution) -> f64 {
    let global = v_global(eps);
    let m = ((4.0 * n as f64 / eps).ceil() as usize).max(4);
    if binom(m + n - 1, n - 1) > MAX_GRID_POINTS {
        return global;
    }
    match v_max_over_region(n, eps, region, m, exec) {
        Ok(v) => v.min(global),
        Err(_) => global,
    }
}

/// `ε₂` from the structural route, with notes; `Err` text names the failed step.
fn structural_eps2(sd: &SpectralData, p: &LipProfile, opts: &CertOptions, two: bool, notes: &mut Vec<String>) -> std::result::Result<f64, String> {
    let n = sd.n;
    let m = opts.grid.unwrap_or_else(|| default_grid(n));
    let interior = RegionSpec::Interior { eps: p.eps / 2.0 };
    if two {
        let p0 = sd.pvec[0].approx.clone();
        let region = RegionSpec::Intersection(vec![interior, RegionSpec::BallComplement { center: p0, radius: p.eps / 2.0 }]);
        let w = inf_w_region_adaptive(sd, &region, &(0..n).collect::<Vec<_>>(), m, 64 * m, 2 * MAX_GRID_POINTS, opts.exec)
            .map_err(|e| format!("separation constant eps3 not certified positive: {e}"))?;
        let (eps3, grid) = (w.lower, w.m);
        let v = v_upper(n, eps3, &region, opts.exec);
        notes.push(format!("eps3 = {eps3:.6} on grid 1/{grid}; V_eps(eps3) <= {v:.6}"));
        return Ok(v.abs() / 2.0);
    }
    match sd.case_tag {
        CaseTag::Case1 => {
            let e1 = eps1_tilde(sd, m, opts.exec).map_err(|e| e.to_string())?;
            let c = sd.min_g();
            let v = v_global(e1.value);
            notes.push(format!("eps1~ = {:.6} on grid 1/{}; c~ = {c:.6}; V(eps1~) = {v:.6}", e1.value, e1.m));
            Ok(c * v.abs() / 2.0)
        }
        tag => {
            let set: Vec<usize> = match tag {
                CaseTag::Case2_1 => vec![0],
                CaseTag::Case2_2 => vec![n - 1],
                _ => vec![0, n - 1],
            };
            let mut c_w = f64::INFINITY;
            for &i in &set {
                let w = inf_w_region_adaptive(sd, &interior, &[i], m, 64 * m, 2 * MAX_GRID_POINTS, opts.exec)
                    .map_err(|e| format!("W lower bound over q_i >= eps/2 not certified: {e}"))?;
                c_w = c_w.min(w.lower);
            }
            let c_i = sd.inf_sum_g(&set).map_err(|e| e.to_string())?.inf;
            let v = v_upper(n, c_w, &interior, opts.exec);
            notes.push(format!("I = {set:?}; c_I = {c_i:.6}; W >= {c_w:.6}; V <= {v:.6}"));
            Ok(c_i * v.abs() / 2.0)
        }
    }
}

fn region_eps2(sd: &SpectralData, region: &RegionSpec, claim: Option<f64>, notes: &mut Vec<String>) -> std::result::Result<f64, String> {
    let sup = sup_entropy_region(sd, region).map_err(|e| e.to_string())?;
    notes.push(format!("sup of s_N over region = {:.6} at y = {:.6}, q = {:?}", sup.value, sup.y, sup.q));
    if !(sup.value < 0.0) {
        return Err("region entropy supremum is not negative".into());
    }
    match claim {
        Some(c) if sup.value <= -c => Ok(c),
        Some(c) => Err(format!("claimed eps2 = {c} exceeds |sup| = {:.6}", -sup.value)),
        None => Ok(-sup.value),
    }
}

fn pipeline(theorem: TheoremKind, p: &LipProfile, sd: &SpectralData, opts: &CertOptions) -> Result<Certificate> {
    if p.r.len() != sd.n {
        return Err(Error::Domain { value: format!("profile has {} entries, alphabet has {}", p.r.len(), sd.n) });
    }
    let kind = if matches!(opts.route, Route::RegionDirect { .. }) { TheoremKind::RegionDirect } else { theorem };
    let mut cert = Certificate::blank(kind, &opts.route, sd, p);
    let distinct = sd.distinct_p().len();
    if theorem == TheoremKind::T1 && distinct < 2 {
        return Ok(cert.reject("all vectors p_i coincide; use the second theorem"));
    }
    if theorem == TheoremKind::T2 && distinct != 1 {
        return Ok(cert.reject("vectors p_i are not all equal; use the first theorem"));
    }
    let s = similarity_exponent(&p.r)?;
    let q_tilde: Vec<f64> = p.r.iter().map(|x| x.powf(s)).collect();
    let delta = opts.delta.unwrap_or(cert.delta_required.max(0.0));
    cert.s = s;
    cert.q_tilde = q_tilde.clone();
    cert.delta = delta;
    if p.sum() > 1.0 + delta {
        return Ok(cert.reject(format!("sum of r = {:.6} exceeds 1 + delta = {:.6}", p.sum(), 1.0 + delta)));
    }
    if theorem == TheoremKind::T2 {
        let dist = l1(&p.r, &sd.pvec[0].approx);
        cert.notes.push(format!("|r - p_0| = {dist:.6}"));
        if dist < p.eps {
            return Ok(cert.reject(format!("|r - p_0| = {dist:.6} < eps")));
        }
    }
    let mut notes = Vec::new();
    let eps2 = match &opts.route {
        Route::Structural => structural_eps2(sd, p, opts, theorem == TheoremKind::T2, &mut notes),
        Route::RegionDirect { region, eps2_claim } => {
            if !region.contains(&q_tilde) {
                cert.notes.append(&mut notes);
                return Ok(cert.reject("q~ = (r_i^s) lies outside the region"));
            }
            region_eps2(sd, region, *eps2_claim, &mut notes)
        }
    };
    cert.notes.append(&mut notes);
    let eps2 = match eps2 {
        Ok(e) if e > 0.0 => e,
        Ok(_) => return Ok(cert.reject("eps2 is not positive")),
        Err(why) => return Ok(cert.reject(why)),
    };
    cert.eps2 = eps2;
    let db = delta_bounds(sd.n, p.eps, eps2, Some(delta));
    cert.delta_bounds = db.clone();
    let l = (1.0 / p.eps).ln();
    cert.bound = s_upper(sd.n, delta) - eps2 / l;
    cert.bound_at_r = s - eps2 / l;
    if db.final_ok != Some(true) {
        return Ok(cert.reject(format!("delta = {delta} violates the final-delta condition (max {:.6})", db.final_delta)));
    }
    if matches!(opts.route, Route::Structural) {
        let needs_interior = theorem == TheoremKind::T2 || sd.case_tag != CaseTag::Case1;
        if needs_interior && q_tilde.iter().any(|&x| x < p.eps / 2.0) {
            return Ok(cert.reject("q~ has an entry below eps/2"));
        }
        if theorem == TheoremKind::T2 && db.delta_2_ok != Some(true) {
            return Ok(cert.reject(format!("delta = {delta} violates the delta-2 condition (max {:.6})", db.delta_2)));
        }
        if theorem == TheoremKind::T1 && sd.case_tag != CaseTag::Case1 {
            cert.notes.push("case 2 constants computed numerically (numerically certified)".into());
        }
    }
    if !(cert.bound < 1.0) {
        let why = format!("bound {:.6} is not below 1", cert.bound);
        return Ok(cert.reject(why));
    }
    cert.verdict = Verdict::Certified;
    Ok(cert)
}

/// Pipeline for systems with at least two distinct `𝔭_i`.
pub fn theorem1_certificate(profile: &LipProfile, g: &SpectralData, opts: &CertOptions) -> Result<Certificate> {
    pipeline(TheoremKind::T1, profile, g, opts)
}

/// Pipeline for systems whose `𝔭_i` all coincide.
pub fn theorem2_certificate(profile: &LipProfile, g: &SpectralData, opts: &CertOptions) -> Result<Certificate> {
    pipeline(TheoremKind::T2, profile, g, opts)
}

/// Chooses the pipeline by the number of distinct `𝔭_i`.
pub fn certify(profile: &LipProfile, g: &SpectralData, opts: &CertOptions) -> Result<Certificate> {
    if g.distinct_p().len() >= 2 {
        theorem1_certificate(profile, g, opts)
    } else {
        theorem2_certificate(profile, g, opts)
    }
}

/// Grid points of the simplex inside a region; exposed for sweeps.
pub fn region_grid(n: usize, m: usize, region: &RegionSpec) -> Vec<Vec<f64>> {
    simplex_grid(n, m).into_iter().filter(|q| region.contains(q)).collect()
}

//! JSON configuration: two map systems plus run defaults.
//!
//! Coefficients are strings (`"p/q"` or decimal literals) and are parsed
//! exactly, so a config survives a serialize/parse round trip unchanged.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conjugacy::ConjugacyPair;
use crate::entropy_opt::RegionSpec;
use crate::error::{Error, Result};
use crate::exact_maps::{IntervalMap, MapSystem};
use crate::rat::{format_rat, parse_rat, to_f64, Rat};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MapRecord {
    Mobius { a: String, b: String, c: String, d: String },
    Affine { slope: String, intercept: String },
    /// `x ↦ b + a x + c x (1 − x)`; evaluated in floating point.
    Quad { a: String, b: String, c: String },
}

impl MapRecord {
    pub fn to_map(&self) -> Result<IntervalMap> {
        match self {
            MapRecord::Mobius { a, b, c, d } => IntervalMap::mobius(parse_rat(a)?, parse_rat(b)?, parse_rat(c)?, parse_rat(d)?),
            MapRecord::Affine { slope, intercept } => IntervalMap::affine(parse_rat(slope)?, parse_rat(intercept)?),
            MapRecord::Quad { a, b, c } => IntervalMap::quad(to_f64(&parse_rat(a)?), to_f64(&parse_rat(b)?), to_f64(&parse_rat(c)?)),
        }
    }

    /// Rational coefficients in declaration order.
    pub fn rationals(&self) -> Result<Vec<Rat>> {
        let fields: Vec<&String> = match self {
            MapRecord::Mobius { a, b, c, d } => vec![a, b, c, d],
            MapRecord::Affine { slope, intercept } => vec![slope, intercept],
            MapRecord::Quad { a, b, c } => vec![a, b, c],
        };
        fields.into_iter().map(|s| parse_rat(s)).collect()
    }

    /// Same record with every coefficient rewritten in lowest terms.
    pub fn canonical(&self) -> Result<Self> {
        let r = self.rationals()?;
        let s = |k: usize| format_rat(&r[k]);
        Ok(match self {
            MapRecord::Mobius { .. } => MapRecord::Mobius { a: s(0), b: s(1), c: s(2), d: s(3) },
            MapRecord::Affine { .. } => MapRecord::Affine { slope: s(0), intercept: s(1) },
            MapRecord::Quad { .. } => MapRecord::Quad { a: s(0), b: s(1), c: s(2) },
        })
    }
}

/// Defaults for the `bound` command.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub r: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<String>,
    /// Box constraints `[k, lo, hi]` on the coordinates of `q`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Vec<(usize, String, String)>>,
    /// Claimed `ε₂`, accepted only when the computed supremum supports it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps2: Option<String>,
}

fn default_tol() -> f64 {
    1e-12
}

fn default_eps() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub name: String,
    pub g: Vec<MapRecord>,
    pub f: Vec<MapRecord>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundSpec>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Config::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Systems without the compatibility checks, for reporting.
    pub fn raw_systems(&self) -> Result<(Vec<IntervalMap>, Vec<IntervalMap>)> {
        let build = |v: &[MapRecord]| v.iter().map(MapRecord::to_map).collect::<Result<Vec<_>>>();
        Ok((build(&self.g)?, build(&self.f)?))
    }

    pub fn g_system(&self) -> Result<MapSystem> {
        MapSystem::new(self.raw_systems()?.0)
    }

    pub fn f_system(&self) -> Result<MapSystem> {
        MapSystem::new(self.raw_systems()?.1)
    }

    pub fn pair(&self) -> Result<ConjugacyPair> {
        ConjugacyPair::new(self.f_system()?, self.g_system()?)
    }
}

/// Parses `k:lo:hi` entries separated by commas, e.g. `0:4/5:1,2:0:1/8`.
pub fn parse_box_spec(n: usize, spec: &str) -> Result<RegionSpec> {
    let mut parts = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let f: Vec<&str> = item.split(':').collect();
        if f.len() != 3 {
            return Err(Error::Parse(format!("box entry {item:?}: expected k:lo:hi")));
        }
        let k: usize = f[0].trim().parse().map_err(|_| Error::Parse(format!("box index {:?}", f[0])))?;
        if k >= n {
            return Err(Error::Symbol { symbol: k, n });
        }
        parts.push((k, to_f64(&parse_rat(f[1])?), to_f64(&parse_rat(f[2])?)));
    }
    if parts.is_empty() {
        return Err(Error::Parse("empty box spec".into()));
    }
    Ok(RegionSpec::boxed(n, &parts))
}

/// Box region from a config's `bound.region` list.
pub fn region_from_list(n: usize, list: &[(usize, String, String)]) -> Result<RegionSpec> {
    let spec: Vec<String> = list.iter().map(|(k, lo, hi)| format!("{k}:{lo}:{hi}")).collect();
    parse_box_spec(n, &spec.join(","))
}

/// Comma-separated list of exact literals.
pub fn parse_rat_list(s: &str) -> Result<Vec<Rat>> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(parse_rat).collect()
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    Ok(parse_rat_list(s)?.iter().map(to_f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_rationals() {
        let text = include_str!("../../fixtures/example2.json");
        let cfg = Config::from_json(text).unwrap();
        let again = Config::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        for (a, b) in cfg.g.iter().zip(&again.g) {
            assert_eq!(a.rationals().unwrap(), b.rationals().unwrap());
        }
        let canon = MapRecord::Affine { slope: "2/4".into(), intercept: "0.0".into() }.canonical().unwrap();
        assert_eq!(canon, MapRecord::Affine { slope: "1/2".into(), intercept: "0".into() });
    }

    #[test]
    fn boxes_and_errors() {
        let r = parse_box_spec(3, "0:7/16:1/2, 2:7/16:0.5").unwrap();
        assert!(r.contains(&[0.45, 0.1, 0.45]));
        assert!(!r.contains(&[0.4, 0.15, 0.45]));
        assert!(matches!(parse_box_spec(3, "5:0:1"), Err(Error::Symbol { .. })));
        assert!(matches!(parse_box_spec(3, "0:0"), Err(Error::Parse(_))));
        assert!(Config::from_json("{\"name\": 1}").is_err());
        let bad = r#"{"name":"x","g":[{"kind":"affine","slope":"1/2","intercept":"0"}],"f":[]}"#;
        assert!(Config::from_json(bad).unwrap().g_system().is_err());
    }
}

//! Command-line surface: config loading, subcommand dispatch, CSV and SVG output.
//!
//! Exit codes: 0 success, 1 validation failure, 2 numeric or hypothesis
//! failure (for instance a certificate that does not apply), 3 malformed input.

pub mod config;
pub mod examples;
pub mod svg;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{parse_box_spec, BoundSpec, Config, MapRecord};
pub use examples::{reproduce_examples, Check, ExampleResult, Which};
pub use svg::{emit_svg, render_svg};

use crate::conjugacy::{mu_mass, mu_mass_interval, phi_eval, sample_phi, Num, SampleMode};
use crate::dim_certificate::{certify, CertOptions, LipProfile, Route};
use crate::entropy_opt::ProbVector;
use crate::error::{Error, Result};
use crate::exact_maps::{validate_compatible_system, validate_lf_system, IntervalMap, MapSystem};
use crate::markov_sim::{log_ratio_stats, sample_path, SimConfig};
use crate::par::Execution;
use crate::rat::{format_rat, parse_rat, to_f64};
use crate::spectral_y::{Chart, SpectralData};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Io(_) | Error::Symbol { .. } => EXIT_INPUT,
        Error::InvalidMap(_) | Error::Condition(_) | Error::Incompatible(_) | Error::Domain { .. } => EXIT_VALIDATION,
        Error::DepthCap { .. } | Error::NotExact | Error::Infeasible(_) | Error::Hypothesis(_) | Error::Numeric(_) => EXIT_NUMERIC,
    }
}

#[derive(Parser, Debug)]
#[command(name = "conjkit", version, about = "Conjugacies between interval map systems: exact analysis, sampling and dimension bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check both map systems (compatibility, contractivity, LF conditions).
    Validate { cfg: PathBuf },
    /// Print Y, G, H, fixed points, the vectors p_i and the case tag of the g-system.
    Analyze { cfg: PathBuf },
    /// Evaluate the conjugacy at a point.
    Phi {
        cfg: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Mass of a cylinder word or an interval under the pushed-forward measure.
    Measure {
        cfg: PathBuf,
        #[arg(long, conflicts_with = "interval", required_unless_present = "interval")]
        word: Option<String>,
        #[arg(long)]
        interval: Option<String>,
    },
    /// Run the place-dependent chain and report long-run averages.
    Simulate {
        cfg: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        #[arg(long, default_value_t = 8)]
        chains: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Comparison vector, comma separated; uniform when omitted.
        #[arg(long)]
        q: Option<String>,
    },
    /// Certify an upper bound on the dimension of the pushed-forward measure.
    Bound {
        cfg: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
        /// Lipschitz profile r_0,r_1,...; defaults to the config, then to the f-maps.
        #[arg(long)]
        r: Option<String>,
        /// Box constraints k:lo:hi,... selecting the region-direct route.
        #[arg(long)]
        region: Option<String>,
        /// Print the machine-readable record as JSON after the report.
        #[arg(long)]
        json: bool,
    },
    /// Reproduce the constants of the worked examples.
    Examples {
        #[arg(long, default_value = "all")]
        which: String,
    },
    /// Write an SVG polyline of the conjugacy.
    Plot {
        cfg: PathBuf,
        #[arg(long, default_value_t = 1024)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a CSV sample `x,phi,err` of the conjugacy.
    Export {
        cfg: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value_t = 1024)]
        samples: usize,
        /// Digits after the decimal point.
        #[arg(long, default_value_t = 12)]
        precision: usize,
    },
}

/// Reads a config file; bundled fixture names (`example1.json`, ...) resolve
/// without a file on disk.
pub fn load_config(path: &Path) -> Result<Config> {
    if path.exists() {
        return Config::load(path);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    match examples::bundled(stem) {
        Some(text) => Config::from_json(text),
        None => Err(Error::Io(format!("{}: no such file", path.display()))),
    }
}

/// Parses `argv` (program name first) and runs the command; returns the exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Validate { cfg } => validate(&load_config(&cfg)?, out),
        Command::Analyze { cfg } => analyze(&load_config(&cfg)?, out),
        Command::Phi { cfg, x, tol } => {
            let cfg = load_config(&cfg)?;
            let pair = cfg.pair()?;
            let xr = parse_rat(&x)?;
            let num = if pair.is_exact() { Num::Exact(xr) } else { Num::Float(to_f64(&xr)) };
            let v = phi_eval(&pair, &num, tol.unwrap_or(cfg.tol))?;
            match &v.exact {
                Some(r) => writeln!(out, "phi({x}) = {} exactly (depth {})", format_rat(r), v.depth),
                None => writeln!(out, "phi({x}) = {:.15} +- {:.3e} (depth {})", v.value, v.err, v.depth),
            }
            .map_err(io)?;
            Ok(if v.converged { EXIT_OK } else { EXIT_NUMERIC })
        }
        Command::Measure { cfg, word, interval } => {
            let cfg = load_config(&cfg)?;
            let pair = cfg.pair()?;
            if let Some(w) = word {
                let word: Vec<usize> = w
                    .split(',')
                    .map(|s| s.trim().parse().map_err(|_| Error::Parse(format!("word symbol {s:?}"))))
                    .collect::<Result<_>>()?;
                let m = mu_mass(&pair, &word)?;
                writeln!(out, "mu({word:?}) = {} ({:.15})", format_rat(&m), to_f64(&m)).map_err(io)?;
            } else if let Some(iv) = interval {
                let ends = config::parse_rat_list(&iv)?;
                if ends.len() != 2 {
                    return Err(Error::Parse(format!("--interval {iv:?}: expected u,v")));
                }
                let num = |r: &crate::rat::Rat| if pair.is_exact() { Num::Exact(r.clone()) } else { Num::Float(to_f64(r)) };
                let v = mu_mass_interval(&pair, &num(&ends[0]), &num(&ends[1]), cfg.tol)?;
                match &v.exact {
                    Some(r) => writeln!(out, "mu([{iv}]) = {} exactly", format_rat(r)),
                    None => writeln!(out, "mu([{iv}]) = {:.15} +- {:.3e}", v.value, v.err),
                }
                .map_err(io)?;
            }
            Ok(EXIT_OK)
        }
        Command::Simulate { cfg, steps, chains, seed, q } => {
            let cfg = load_config(&cfg)?;
            let sd = SpectralData::new(&cfg.g_system()?)?;
            let q = match q {
                Some(s) => ProbVector::from_rats(&config::parse_rat_list(&s)?)?,
                None => ProbVector::uniform(sd.n),
            };
            if q.len() != sd.n {
                return Err(Error::Parse(format!("--q has {} entries, alphabet has {}", q.len(), sd.n)));
            }
            let sim = SimConfig::new(seed.unwrap_or(cfg.seed), steps, chains, q)?;
            let path = sample_path(&sd, &sim, Execution::default())?;
            let lr = log_ratio_stats(&path);
            writeln!(out, "chains = {chains}, steps = {steps}, seed = {}", sim.seed).map_err(io)?;
            writeln!(out, "birkhoff mean of s_N = {:.6} +- {:.6}", path.birkhoff.mean, path.birkhoff.ci95).map_err(io)?;
            writeln!(out, "-log R_n / n = {:.6} +- {:.6}", path.neg_log_r.mean, path.neg_log_r.ci95).map_err(io)?;
            for (i, f) in path.freqs.iter().enumerate() {
                writeln!(out, "frequency of {i} = {:.6} +- {:.6}", f.mean, f.ci95).map_err(io)?;
            }
            writeln!(out, "averages agree within 2 CI widths: {}", lr.agree(2.0)).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Bound { cfg, eps, r, region, json } => bound(&load_config(&cfg)?, eps, r, region, json, out),
        Command::Examples { which } => {
            let which: Which = which.parse()?;
            let results = reproduce_examples(which)?;
            for ex in &results {
                writeln!(out, "{ex}").map_err(io)?;
            }
            Ok(if results.iter().all(ExampleResult::pass) { EXIT_OK } else { EXIT_VALIDATION })
        }
        Command::Plot { cfg, samples, out: path } => {
            let cfg = load_config(&cfg)?;
            let s = sample_phi(&cfg.pair()?, samples, cfg.tol, SampleMode::Uniform, Execution::default())?;
            emit_svg(&s, &path)?;
            writeln!(out, "wrote {} ({} points)", path.display(), s.points.len()).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Export { cfg, csv, samples, precision } => {
            let cfg = load_config(&cfg)?;
            let s = sample_phi(&cfg.pair()?, samples, cfg.tol, SampleMode::Uniform, Execution::default())?;
            std::fs::write(&csv, s.to_csv(precision)).map_err(|e| Error::Io(format!("{}: {e}", csv.display())))?;
            writeln!(out, "wrote {} ({} rows)", csv.display(), s.points.len()).map_err(io)?;
            Ok(EXIT_OK)
        }
    }
}

fn report_system(label: &str, maps: &[IntervalMap], out: &mut dyn Write) -> Result<bool> {
    let sys = MapSystem::new(maps.to_vec())?;
    let rep = validate_compatible_system(&sys);
    let mut ok = rep.compatible;
    writeln!(out, "{label}: N = {}, compatible = {}, d-system = {}", rep.n, rep.compatible, rep.d_system).map_err(io)?;
    for j in &rep.failed_joints {
        writeln!(out, "  joint {}: {} != {}", j.index, j.left, j.right).map_err(io)?;
    }
    for (i, w) in rep.weakly_contractive.iter().enumerate() {
        if !w {
            ok = false;
            writeln!(out, "  map {i} is not weakly contractive").map_err(io)?;
        }
    }
    if let Some(mobs) = sys.mobius_maps() {
        let coeffs: Vec<_> = mobs.iter().map(|m| (m.a.clone(), m.b.clone(), m.c.clone(), m.d.clone())).collect();
        let lf = validate_lf_system(&coeffs);
        match lf.first_violation() {
            Some(v) => {
                ok = false;
                writeln!(out, "  LF conditions: violated ({v})").map_err(io)?;
            }
            None => writeln!(out, "  LF conditions: hold (strict contraction for every map: {})", lf.all_strict()).map_err(io)?,
        }
    }
    Ok(ok)
}

fn validate(cfg: &Config, out: &mut dyn Write) -> Result<i32> {
    let (g, f) = cfg.raw_systems()?;
    writeln!(out, "config {}", cfg.name).map_err(io)?;
    let ok_g = report_system("g", &g, out)?;
    let ok_f = report_system("f", &f, out)?;
    let same_n = g.len() == f.len();
    if !same_n {
        writeln!(out, "f and g have different sizes ({} vs {})", f.len(), g.len()).map_err(io)?;
    }
    let ok = ok_g && ok_f && same_n;
    writeln!(out, "{}", if ok { "valid" } else { "invalid" }).map_err(io)?;
    Ok(if ok { EXIT_OK } else { EXIT_VALIDATION })
}

fn analyze(cfg: &Config, out: &mut dyn Write) -> Result<i32> {
    let g = cfg.g_system()?;
    g.validate().check()?;
    let sd = SpectralData::new(&g)?;
    let mut w = |s: String| writeln!(out, "{s}").map_err(io);
    w(format!("name = {}", cfg.name))?;
    w(format!("N = {}", sd.n))?;
    w(format!("alpha = {}", sd.domain.alpha))?;
    w(format!("beta = {}", sd.domain.beta))?;
    w(format!("Y = [{}, {}]", sd.domain.alpha, sd.domain.beta))?;
    w(format!("chart = {}", if sd.domain.chart == Chart::Identity { "identity" } else { "t = y/(2+y)" }))?;
    for i in 0..sd.n {
        let e = sd.g_extremes(i);
        let show = |x: &Option<crate::rat::Rat>, v: f64| x.as_ref().map(format_rat).unwrap_or_else(|| format!("{v:.12}"));
        w(format!("G_{i} over Y: inf = {}, sup = {}", show(&e.inf_exact, e.inf), show(&e.sup_exact, e.sup)))?;
    }
    for i in 0..sd.n {
        w(format!("H_{i}(y) = {}", sd.h[i].to_string().replace('x', "y")))?;
    }
    for i in 0..sd.n {
        w(format!("Fix(H_{i}) = {}", sd.fix_h[i]))?;
    }
    for i in 0..sd.n {
        w(format!("p_{i} = G(Fix(H_{i})) = {}", sd.pvec[i]))?;
    }
    w(format!("distinct p vectors = {}", sd.distinct_p().len()))?;
    w(format!("case = {}", sd.case_tag))?;
    Ok(EXIT_OK)
}

fn bound(cfg: &Config, eps: Option<f64>, r: Option<String>, region: Option<String>, json: bool, out: &mut dyn Write) -> Result<i32> {
    let g = cfg.g_system()?;
    let sd = SpectralData::new(&g)?;
    let spec = cfg.bound.clone().unwrap_or_default();
    let eps = eps.unwrap_or(cfg.eps);
    let r_vals = match (&r, spec.r.is_empty()) {
        (Some(s), _) => config::parse_f64_list(s)?,
        (None, false) => spec.r.iter().map(|x| parse_rat(x).map(|v| to_f64(&v))).collect::<Result<_>>()?,
        (None, true) => cfg.f_system()?.lips_f64(),
    };
    let profile = LipProfile::new(r_vals, eps)?;
    let delta = spec.delta.as_deref().map(parse_rat).transpose()?.map(|d| to_f64(&d));
    let route = match (region, &spec.region) {
        (Some(s), _) => Route::RegionDirect { region: parse_box_spec(sd.n, &s)?, eps2_claim: None },
        (None, Some(list)) if r.is_none() => {
            let claim = spec.eps2.as_deref().map(parse_rat).transpose()?.map(|c| to_f64(&c));
            Route::RegionDirect { region: config::region_from_list(sd.n, list)?, eps2_claim: claim }
        }
        _ => Route::Structural,
    };
    let opts = CertOptions { delta, route, grid: None, exec: Execution::default() };
    let cert = certify(&profile, &sd, &opts)?;
    write!(out, "{}", cert.to_report()).map_err(io)?;
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&cert).map_err(|e| Error::Numeric(e.to_string()))?).map_err(io)?;
    }
    Ok(if cert.verdict.is_certified() { EXIT_OK } else { EXIT_NUMERIC })
}

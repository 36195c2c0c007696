//! Command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage or
//! evaluation errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::c0::{grid_points, Engine, ReconstructedFunction, Reconstructor, Resolution, Sample};
use crate::ck::{reconstruct_ck_grid, reconstruct_ck_point, DerivativeProfile, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::func::{cocycle_from_seed, FuncSpec, Seed};
use crate::rational::{Point, Rational};
use crate::verify::{
    check_bound_c0, check_lattice_bound, kurepa_residual, random_pairs, random_simple_fraction,
    random_triples, rng, symmetry_residual, to_ndjson, VerificationReport, DEFAULT_SEED,
    LATTICE_TOL,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "cocycle",
    version,
    about = "Reconstruct f from F(x, y) = f(x + y) - f(x) - f(y)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kurepa and symmetry residuals of F on random samples.
    Check(CheckArgs),
    /// Sample a solution f on a rational grid or at given points.
    Reconstruct(ReconstructArgs),
    /// Modulus-of-continuity bounds for the reconstructed f.
    VerifyBound(BoundArgs),
    /// Timings for long quotient chains and deep dyadic grids.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Source {
    /// Expression for F in two variables, or for a seed g in one.
    #[arg(long, conflicts_with = "seed", required_unless_present = "seed")]
    pub expr: Option<String>,
    /// Builtin seed: square, cube, expo, sine, hoelder.
    #[arg(long)]
    pub seed: Option<Seed>,
    /// Comma-separated variable names of --expr.
    #[arg(long, value_delimiter = ',', default_value = "x,y")]
    pub vars: Vec<String>,
    /// key=value file supplying any flag; the command line wins.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Source {
    /// The bivariate F this source describes.
    pub fn function(&self) -> Result<FuncSpec> {
        match (&self.expr, self.seed) {
            (Some(src), None) => {
                let spec = FuncSpec::parse(src, &self.vars)?;
                if spec.arity() == 1 {
                    cocycle_from_seed(spec)
                } else {
                    Ok(spec)
                }
            }
            (None, Some(seed)) => cocycle_from_seed(FuncSpec::Builtin(seed)),
            _ => Err(Error::Argument(
                "exactly one of --expr and --seed is required".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    EuclidChain,
    Dyadic,
    Ck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub source: Source,
    /// Half-width M of the sampling box.
    #[arg(long = "box", default_value_t = 1.0)]
    pub m: f64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub rng_seed: u64,
    #[arg(long, default_value_t = LATTICE_TOL)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true)]
    pub interval: Option<Vec<Rational>>,
    #[arg(long, conflicts_with = "dyadic_level")]
    pub denominators: Option<u64>,
    #[arg(long)]
    pub dyadic_level: Option<u32>,
    /// Points to evaluate instead of a grid; `p/n` is exact, decimals go through the limit.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "interval")]
    pub at: Vec<Point>,
    #[arg(long, value_enum, default_value_t = EngineArg::EuclidChain)]
    pub engine: EngineArg,
    /// Accuracy at real points (limit step or quadrature).
    #[arg(long, default_value_t = 1e-9)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub source: Source,
    /// Half-width M of the box; at least 1.
    #[arg(long = "box", default_value = "1")]
    pub m: Rational,
    /// Rational delta in (0, 1/2); repeatable.
    #[arg(long, default_values = ["1/4", "1/8", "1/16"])]
    pub delta: Vec<Rational>,
    /// Rationals p/n in (0, 1/2) for the lattice bound; repeatable.
    #[arg(long)]
    pub at: Vec<Rational>,
    /// Random lattice points p/n (n <= 1000) added to --at.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub rng_seed: u64,
    #[arg(long, value_enum, default_value_t = EngineArg::EuclidChain)]
    pub engine: EngineArg,
    #[arg(long, default_value_t = LATTICE_TOL)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: Source,
    /// Rationals whose h is timed; repeatable.
    #[arg(long, default_values = ["1/1000003"])]
    pub at: Vec<Rational>,
    #[arg(long, default_value_t = 12)]
    pub dyadic_level: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Keys whose config value expands to several arguments.
const MULTI_VALUE_KEYS: [&str; 3] = ["interval", "delta", "at"];

/// Reads a key=value config file into `--key value` arguments.
pub fn config_args(path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Argument(format!("{}:{}: expected key=value", path.display(), i + 1))
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key == "config" {
            return Err(Error::Argument(
                "config files cannot include other config files".into(),
            ));
        }
        let value = value.trim();
        let values = if MULTI_VALUE_KEYS.contains(&key.as_str()) {
            value
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        } else {
            vec![value.to_string()]
        };
        out.entry(key).or_default().extend(values);
    }
    Ok(out.into_iter().collect())
}

/// Splices config-file flags in after the subcommand, skipping any flag
/// already present on the command line.
fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else if a == "--config" {
            path = strs.get(i + 1).map(PathBuf::from);
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let present = |key: &str| {
        let flag = format!("--{key}");
        strs.iter()
            .any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let mut extra = Vec::new();
    for (key, values) in config_args(&path)? {
        let overridden = match key.as_str() {
            "expr" | "seed" => present("expr") || present("seed"),
            "denominators" | "dyadic-level" => present("denominators") || present("dyadic-level"),
            k => present(k),
        };
        if overridden {
            continue;
        }
        if key == "interval" {
            extra.push(format!("--{key}"));
            extra.extend(values);
        } else {
            for v in values {
                extra.push(format!("--{key}={v}"));
            }
        }
    }
    let mut merged = argv;
    let at = 2.min(merged.len());
    merged.splice(at..at, extra.into_iter().map(OsString::from));
    Ok(merged)
}

/// Runs the tool; returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_PASS
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok((text, out, pass)) => {
            let written = match out {
                Some(path) => fs::write(path, &text)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
                None => stdout.write_all(text.as_bytes()).map_err(Error::from),
            };
            match written {
                Ok(()) if pass => EXIT_PASS,
                Ok(()) => EXIT_FAIL,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    EXIT_ERROR
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn execute(cli: &Cli) -> Result<(String, Option<&PathBuf>, bool)> {
    match &cli.command {
        Command::Check(a) => check(a).map(|(t, p)| (t, a.out.as_ref(), p)),
        Command::Reconstruct(a) => reconstruct(a).map(|t| (t, a.out.as_ref(), true)),
        Command::VerifyBound(a) => verify_bound(a).map(|(t, p)| (t, a.out.as_ref(), p)),
        Command::Bench(a) => bench(a).map(|t| (t, a.out.as_ref(), true)),
    }
}

fn all_pass(reports: &[VerificationReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

fn check(a: &CheckArgs) -> Result<(String, bool)> {
    if a.m.is_nan() || a.m <= 0.0 {
        return Err(Error::Argument(format!(
            "--box must be positive, got {}",
            a.m
        )));
    }
    let f = a.source.function()?;
    let mut g = rng(a.rng_seed);
    let triples = random_triples(&mut g, a.samples, a.m);
    let pairs = random_pairs(&mut g, a.samples, a.m);
    let reports = vec![
        kurepa_residual(&f, &triples, a.tolerance)?,
        symmetry_residual(&f, &pairs, a.tolerance)?,
    ];
    Ok((to_ndjson(&reports), all_pass(&reports)))
}

fn resolution(a: &ReconstructArgs) -> Resolution {
    match (a.denominators, a.dyadic_level) {
        (_, Some(level)) => Resolution::DyadicLevel(level),
        (Some(n), None) => Resolution::Denominators(n),
        (None, None) => Resolution::Denominators(16),
    }
}

fn reconstruct(a: &ReconstructArgs) -> Result<String> {
    let f = a.source.function()?;
    let table = if a.at.is_empty() {
        let (lo, hi) = match a.interval.as_deref() {
            Some([lo, hi]) => (lo.clone(), hi.clone()),
            _ => (Rational::zero(), Rational::one()),
        };
        match a.engine {
            EngineArg::Ck => {
                let pts = grid_points(&lo, &hi, resolution(a))?;
                reconstruct_ck_grid(&f, &pts, a.epsilon)?
            }
            EngineArg::EuclidChain | EngineArg::Dyadic => {
                let engine = c0_engine(a.engine);
                Reconstructor::new(&f)?.reconstruct_grid(
                    &lo,
                    &hi,
                    resolution(a),
                    engine,
                    a.epsilon,
                )?
            }
        }
    } else {
        sample_points(&f, &a.at, a.engine, a.epsilon)?
    };
    Ok(match a.format {
        Format::Csv => table.to_csv(),
        Format::Json => table_json(&table) + "\n",
    })
}

fn c0_engine(e: EngineArg) -> Engine {
    match e {
        EngineArg::Dyadic => Engine::Dyadic,
        _ => Engine::EuclidChain,
    }
}

fn sample_points(
    f: &FuncSpec,
    points: &[Point],
    engine: EngineArg,
    eps: f64,
) -> Result<ReconstructedFunction> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|x, y| x.to_f64().total_cmp(&y.to_f64()));
    pts.dedup_by(|x, y| x.to_f64() == y.to_f64());
    let at = |p: &Point, e: Error| Error::AtPoint {
        t: p.to_string(),
        source: Box::new(e),
    };
    match engine {
        EngineArg::Ck => {
            let samples = pts
                .iter()
                .map(|p| {
                    let v = reconstruct_ck_point(f, p.to_f64(), eps.min(DEFAULT_TOL))
                        .map_err(|e| at(p, e))?;
                    Ok(sample(p, v))
                })
                .collect::<Result<Vec<_>>>()?;
            let f00 = crate::func::Bivariate::eval2(f, 0.0, 0.0)?;
            ReconstructedFunction::new(
                samples,
                crate::c0::EngineTag::Ck,
                eps,
                crate::c0::Normalization::FlatAtOrigin { f_at_zero: -f00 },
            )
        }
        _ => {
            let engine = c0_engine(engine);
            let rec = Reconstructor::new(f)?;
            let samples = pts
                .iter()
                .map(|p| {
                    let v = rec
                        .reconstruct_point(p, eps, engine)
                        .map_err(|e| at(p, e))?;
                    Ok(sample(p, v.value))
                })
                .collect::<Result<Vec<_>>>()?;
            ReconstructedFunction::new(
                samples,
                engine.into(),
                eps,
                crate::c0::Normalization::EqualEndpoints {
                    f_at_zero: -rec.f00(),
                },
            )
        }
    }
}

fn sample(p: &Point, f: f64) -> Sample {
    Sample {
        t: p.to_f64(),
        exact: p.as_exact().cloned(),
        f,
    }
}

fn table_json(t: &ReconstructedFunction) -> String {
    let (kind, f0) = match t.normalization {
        crate::c0::Normalization::EqualEndpoints { f_at_zero } => ("equal-endpoints", f_at_zero),
        crate::c0::Normalization::FlatAtOrigin { f_at_zero } => ("flat-at-origin", f_at_zero),
    };
    let samples: Vec<Value> = t
        .samples()
        .iter()
        .map(|s| json!({ "t": s.t, "t_exact": s.exact.as_ref().map(|r| r.to_string()), "f": s.f }))
        .collect();
    json!({
        "engine": t.engine.to_string(),
        "epsilon": t.epsilon,
        "normalization": { "kind": kind, "f_at_zero": f0 + 0.0 },
        "samples": samples,
    })
    .to_string()
}

fn verify_bound(a: &BoundArgs) -> Result<(String, bool)> {
    let f = a.source.function()?;
    let rec = Reconstructor::new(&f)?;
    let engine = c0_engine(a.engine);
    let mut reports = check_bound_c0(
        &f,
        |r: &Rational| rec.f_rational(r, engine),
        &a.delta,
        &a.m,
        a.tolerance,
    )?;
    let mut points = a.at.clone();
    let mut g = rng(a.rng_seed);
    points.extend((0..a.samples).map(|_| random_simple_fraction(&mut g, 1000)));
    reports.extend(check_lattice_bound(
        &f,
        |r: &Rational| rec.h_rational(r, engine),
        &points,
        a.tolerance,
    )?);
    Ok((to_ndjson(&reports), all_pass(&reports)))
}

fn bench(a: &BenchArgs) -> Result<String> {
    let f = a.source.function()?;
    let mut lines = String::new();
    for r in &a.at {
        let rec = Reconstructor::new(&f)?;
        let start = Instant::now();
        let h = rec.h_rational(r, Engine::EuclidChain)?;
        let secs = start.elapsed().as_secs_f64();
        lines += &json!({ "case": "h_rational", "r": r.to_string(), "h": h, "seconds": secs })
            .to_string();
        lines.push('\n');
    }
    for engine in [Engine::EuclidChain, Engine::Dyadic] {
        let rec = Reconstructor::new(&f)?;
        let start = Instant::now();
        let table = rec.reconstruct_grid(
            &Rational::zero(),
            &Rational::one(),
            Resolution::DyadicLevel(a.dyadic_level),
            engine,
            1e-9,
        )?;
        let secs = start.elapsed().as_secs_f64();
        lines += &json!({
            "case": "dyadic_grid",
            "engine": engine.name(),
            "level": a.dyadic_level,
            "points": table.len(),
            "seconds": secs,
        })
        .to_string();
        lines.push('\n');
    }
    if f.arity() == 2 {
        let profile = DerivativeProfile::new(&f)?;
        let start = Instant::now();
        let v = reconstruct_ck_point(&f, 1.0, DEFAULT_TOL)?;
        let secs = start.elapsed().as_secs_f64();
        lines += &json!({ "case": "ck_point", "t": 1.0, "f": v, "h1_origin": profile.at_origin(), "seconds": secs })
            .to_string();
        lines.push('\n');
    }
    Ok(lines)
}

//! Command-line front end. Exit codes: 0 success, 1 usage or domain error,
//! 2 verification failure or singular propagation.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Deserialize;
use serde_json::json;

use crate::forms::{action, cube_action, CubeFields, FieldMap};
use crate::lattice::{CubeLabel, Dir, MultiIndex, OrientedSquare, QuadSurface};
use crate::models::{Model, QuadModel};
use crate::solve::{propagate_box, AxesData, SolveError};
use crate::verify::sampling::trial_rng;
use crate::verify::{run_suite, Subject, Suite, SuiteConfig, SuiteReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

pub const SEED_VAR: &str = "PLURILAG_SEED";
pub const DEFAULT_ALPHA: [f64; 3] = [1.0, 2.0, 3.0];
/// Candidate data sets tried by [`random_axes`].
const RANDOM_CANDIDATES: u64 = 32;

#[derive(Debug, Parser)]
#[command(
    name = "plurilag",
    version,
    about = "Pluri-Lagrangian structure of quad-equations: checks and tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a randomized verification suite and write its report.
    Verify(VerifyArgs),
    /// Fill a box with a quad-equation solution from axis data.
    Propagate(PropagateArgs),
    /// Evaluate the action of a form on a quad-surface.
    Action(ActionArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Registry key: q1d0, q1d1, q3d0, h1, h2, h3, exp, exp-gamma, zero.
    #[arg(long, default_value = "q1d0")]
    model: String,
    /// Comma-separated parameters per direction, e.g. 1,2,3.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// consistency, octahedron, closedness, quad, flip, flower or gamma.
    suite: String,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Falls back to PLURILAG_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance override `check=value`; repeatable.
    #[arg(long)]
    tol: Vec<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate a copy of the form whose Lambda gains `eps (y - x)^3`.
    #[arg(long, value_name = "EPS")]
    perturb: Option<f64>,
    /// Flips per trial in the flip suite.
    #[arg(long, default_value_t = 10)]
    flips: usize,
    /// Edge length of the box in the flip suite.
    #[arg(long = "box", default_value_t = 3)]
    box_size: usize,
    /// Deformations of the gamma suite.
    #[arg(long)]
    gammas: Option<String>,
}

#[derive(Debug, Args)]
struct PropagateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Box dimensions `n1,n2,n3`; ignored with --data.
    #[arg(long = "box", default_value = "2,2,2")]
    dims: String,
    /// Axis data file: {"origin": x, "axes": [[...], [...], [...]]}.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ActionArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Surface file: {"m": dim, "squares": [{"base": [...], "dirs": [i, j]}]}.
    #[arg(long)]
    surface: PathBuf,
    /// Field file: {"m": dim, "values": [{"at": [...], "x": value}]}.
    #[arg(long)]
    fields: PathBuf,
    /// Perform this many random flips and report each change of the action.
    #[arg(long, value_name = "N")]
    flip: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::usage(e.to_string())
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Verify(a) => cmd_verify(a, out),
        Command::Propagate(a) => cmd_propagate(a, out),
        Command::Action(a) => cmd_action(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("{what}: `{s}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(CliError::usage(format!("{what}: `{s}` is not finite")))
            }
        })
        .collect()
}

fn alpha3(text: &Option<String>) -> Result<Option<[f64; 3]>, CliError> {
    let Some(t) = text else { return Ok(None) };
    let v = parse_list(t, "--alpha")?;
    <[f64; 3]>::try_from(v.as_slice())
        .map(Some)
        .map_err(|_| CliError::usage("--alpha takes three values"))
}

fn model(args: &ModelArgs) -> Result<Model, CliError> {
    let mut params = Vec::new();
    if let Some(g) = args.gamma {
        params.push(("gamma", g));
    }
    if let Some(d) = args.delta {
        params.push(("delta", d));
    }
    Ok(Model::from_key(&args.model, &params)?)
}

fn seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::usage(format!("{SEED_VAR}=`{v}` is not a 64-bit unsigned integer"))
        }),
        Err(_) => Ok(0),
    }
}

fn emit(text: &str, path: &Option<PathBuf>, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", p.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::usage(e.to_string())),
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::usage(format!(
            "{}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn cmd_verify(a: VerifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let suite: Suite = a.suite.parse()?;
    if a.trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    let mut cfg = SuiteConfig::new(model(&a.model)?, a.trials, seed(a.seed)?);
    cfg.alpha = alpha3(&a.model.alpha)?;
    cfg.jobs = a.jobs.max(1);
    cfg.flips = a.flips;
    cfg.box_size = a.box_size;
    if let Some(eps) = a.perturb {
        cfg.subject = Subject::Perturbed { eps };
    }
    if let Some(g) = &a.gammas {
        cfg.gammas = parse_list(g, "--gammas")?;
    }
    for t in &a.tol {
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--tol `{t}` is not check=value")))?;
        let v: f64 = v
            .parse()
            .map_err(|_| CliError::usage(format!("--tol `{t}`: bad value")))?;
        cfg.tolerances.insert(k.to_string(), v);
    }
    let report = run_suite(suite, &cfg)?;
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Csv => csv(&report),
        Format::Human => human(&report),
    };
    emit(&text, &a.out, out)?;
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

fn csv(r: &SuiteReport) -> String {
    let names: Vec<&String> = r.max_residuals.keys().collect();
    let mut s = String::from("trial,resamples");
    for n in &names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for row in &r.rows {
        s.push_str(&format!("{},{}", row.trial, row.resamples));
        for n in &names {
            s.push(',');
            match row.checks.get(*n) {
                Some(Some(v)) => s.push_str(&format!("{v:e}")),
                Some(None) => s.push_str("inf"),
                None => {}
            }
        }
        s.push('\n');
    }
    s
}

fn human(r: &SuiteReport) -> String {
    let mut s = format!(
        "suite {}  model {}  trials {}  seed {}  resamples {}  {} ms\n",
        r.suite, r.model, r.trials, r.seed, r.resamples, r.runtime_ms
    );
    s.push_str(&format!(
        "{:<26} {:>12} {:>12}  status\n",
        "check", "max", "tolerance"
    ));
    for (k, v) in &r.max_residuals {
        let tol = r.tolerances.get(k).copied();
        let ok = matches!((v, tol), (Some(v), Some(t)) if *v < t);
        s.push_str(&format!(
            "{:<26} {:>12} {:>12}  {}\n",
            k,
            v.map_or("inf".to_string(), |v| format!("{v:.3e}")),
            tol.map_or("-".to_string(), |t| format!("{t:.1e}")),
            if ok { "ok" } else { "FAIL" }
        ));
    }
    s.push_str(&format!(
        "{}: {} failing checks\n",
        if r.passed() { "PASS" } else { "FAIL" },
        r.failure_count
    ));
    s
}

fn parse_dims(text: &str) -> Result<[usize; 3], CliError> {
    let v: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("--box `{text}` is not n1,n2,n3")))?;
    match <[usize; 3]>::try_from(v.as_slice()) {
        Ok(d) if d.iter().all(|&n| n > 0) => Ok(d),
        _ => Err(CliError::usage("--box takes three positive integers")),
    }
}

/// Seeded axis data for a box: a few candidates near a linear background or drawn
/// uniformly, keeping the best conditioned one that propagates.
pub fn random_axes(model: &QuadModel, alpha: [f64; 3], dims: [usize; 3], seed: u64) -> AxesData {
    let top = alpha.iter().cloned().fold(f64::MIN, f64::max);
    let slope = |a: f64| match model {
        QuadModel::H1 => (top + 1.0 - a).sqrt(),
        QuadModel::Q3Zero => a,
        _ => a.abs().sqrt(),
    };
    let (lo, hi) = match model {
        QuadModel::Q3Zero => (0.5, 2.0),
        _ => (-1.0, 1.0),
    };
    let candidate = |k: u64| {
        let mut rng = trial_rng(seed, k, 0);
        let linear = k.is_multiple_of(2);
        let axes = [0, 1, 2].map(|d| {
            (1..=dims[d])
                .map(|t| {
                    if linear {
                        slope(alpha[d]) * t as f64 + rng.random_range(-0.05..0.05)
                    } else {
                        rng.random_range(lo..hi)
                    }
                })
                .collect::<Vec<f64>>()
        });
        let origin = if linear {
            rng.random_range(-0.05..0.05)
        } else {
            rng.random_range(lo..hi)
        };
        AxesData { origin, axes }
    };
    let mut best: Option<(f64, AxesData)> = None;
    for k in 0..RANDOM_CANDIDATES {
        let data = candidate(k);
        let score = match propagate_box(model, &data, alpha) {
            Ok(b) if b.fields.sorted().iter().all(|(_, v)| v.abs() <= 1e3) => b.min_conditioning,
            _ => continue,
        };
        if score >= 1e-2 {
            return data;
        }
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, data));
        }
    }
    best.map_or_else(|| candidate(0), |b| b.1)
}

fn field_entries(f: &FieldMap) -> Vec<serde_json::Value> {
    f.sorted()
        .into_iter()
        .map(|(n, x)| json!({ "at": n, "x": x }))
        .collect()
}

fn cmd_propagate(a: PropagateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let m = model(&a.model)?;
    let quad = m.quad()?;
    let alpha = alpha3(&a.model.alpha)?.unwrap_or(DEFAULT_ALPHA);
    let data = match &a.data {
        Some(p) => read_json::<AxesData>(p)?,
        None => random_axes(&quad, alpha, parse_dims(&a.dims)?, seed(a.seed)?),
    };
    if data.dims().contains(&0) {
        return Err(CliError::usage("every axis needs at least one value"));
    }
    let sol = match propagate_box(&quad, &data, alpha) {
        Ok(s) => s,
        Err(e @ SolveError::Singular { .. }) => {
            return Err(CliError {
                code: EXIT_FAILED,
                message: e.to_string(),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let doc = json!({
        "model": m.id,
        "alpha": alpha,
        "dims": sol.dims,
        "cubes": sol.cubes,
        "max_spread": sol.max_spread,
        "min_conditioning": if sol.min_conditioning.is_finite() { Some(sol.min_conditioning) } else { None },
        "data": data,
        "fields": field_entries(&sol.fields),
    });
    emit(&(serde_json::to_string_pretty(&doc)? + "\n"), &a.out, out)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SquareEntry {
    base: Vec<i64>,
    dirs: [Dir; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceFile {
    m: usize,
    squares: Vec<SquareEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldEntry {
    at: Vec<i64>,
    x: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldFile {
    m: usize,
    values: Vec<FieldEntry>,
}

fn load_surface(path: &Path) -> Result<QuadSurface, CliError> {
    let file: SurfaceFile = read_json(path)?;
    let mut squares = Vec::with_capacity(file.squares.len());
    for (k, s) in file.squares.into_iter().enumerate() {
        if s.base.len() != file.m || s.dirs.iter().any(|&d| d == 0 || d > file.m) {
            return Err(CliError::usage(format!(
                "{}: square {k} does not lie in Z^{}",
                path.display(),
                file.m
            )));
        }
        let sq = OrientedSquare::new(MultiIndex::new(s.base), s.dirs[0], s.dirs[1])
            .map_err(|e| CliError::usage(format!("{}: square {k}: {e}", path.display())))?;
        squares.push(sq);
    }
    QuadSurface::new(file.m, squares)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn load_fields(path: &Path, m: usize) -> Result<FieldMap, CliError> {
    let file: FieldFile = read_json(path)?;
    if file.m != m {
        return Err(CliError::usage(format!(
            "{}: fields live in Z^{} but the surface in Z^{m}",
            path.display(),
            file.m
        )));
    }
    let mut f = FieldMap::new();
    for (k, e) in file.values.into_iter().enumerate() {
        if e.at.len() != m || !e.x.is_finite() {
            return Err(CliError::usage(format!(
                "{}: value {k} is malformed",
                path.display()
            )));
        }
        if f.insert(MultiIndex::new(e.at), e.x).is_some() {
            return Err(CliError::usage(format!(
                "{}: value {k} repeats a point",
                path.display()
            )));
        }
    }
    Ok(f)
}

fn cmd_action(a: ActionArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let m = model(&a.model)?;
    let lag = m.lagrangian()?;
    let surface = load_surface(&a.surface)?;
    let dim = surface_dim(&surface);
    let fields = load_fields(&a.fields, dim)?;
    let alpha = match &a.model.alpha {
        Some(t) => parse_list(t, "--alpha")?,
        None => (1..=dim.max(3)).map(|d| d as f64).collect(),
    };
    if alpha.len() < dim {
        return Err(CliError::usage(format!("--alpha needs {dim} values")));
    }
    let form = lag.form(alpha.clone());
    let s = action(&surface, &fields, &*form)?;
    let mut doc =
        json!({ "model": m.id, "alpha": alpha, "squares": surface.squares().len(), "action": s });
    if let Some(n) = a.flip {
        let mut rng = trial_rng(seed(a.seed)?, 0, 0);
        let mut surf = surface;
        let mut current = s;
        let mut flips = Vec::new();
        for _ in 0..n {
            let candidates: Vec<_> = surf
                .flippable_cubes()
                .into_iter()
                .filter(|c| {
                    CubeLabel::ALL
                        .iter()
                        .all(|l| fields.contains(&c.vertex(*l)))
                })
                .collect();
            if candidates.is_empty() {
                break;
            }
            let cube = candidates[rng.random_range(0..candidates.len())].clone();
            let next = surf.flip(&cube)?;
            let after = action(&next, &fields, &*form)?;
            let mut v = [0.0; 8];
            for l in CubeLabel::ALL {
                v[l.index()] = fields.get(&cube.vertex(l))?;
            }
            let s_cube = cube_action(&CubeFields::full(v), cube.dirs(), &*form)?;
            flips.push(json!({
                "base": cube.base(),
                "dirs": cube.dirs(),
                "delta": after - current,
                "cube_action": s_cube,
            }));
            current = after;
            surf = next;
        }
        doc["flips"] = json!(flips);
        doc["final_action"] = json!(current);
    }
    emit(&(serde_json::to_string_pretty(&doc)? + "\n"), &a.out, out)?;
    Ok(EXIT_OK)
}

fn surface_dim(s: &QuadSurface) -> usize {
    s.squares().first().map_or(0, |q| q.base().dim())
}

/// Entry point used by the binary.
pub fn main_with_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let mut full = vec!["plurilag"];
        full.extend_from_slice(args);
        let code = run(full, &mut o, &mut e);
        (
            code,
            String::from_utf8(o).unwrap(),
            String::from_utf8(e).unwrap(),
        )
    }

    #[test]
    fn usage_errors() {
        assert_eq!(call(&["verify", "bogus"]).0, EXIT_USAGE);
        assert_eq!(
            call(&["verify", "consistency", "--model", "h1"]).0,
            EXIT_USAGE
        );
        assert_eq!(
            call(&["verify", "consistency", "--model", "nope"]).0,
            EXIT_USAGE
        );
        assert_eq!(
            call(&["verify", "consistency", "--trials", "0"]).0,
            EXIT_USAGE
        );
        assert_eq!(
            call(&["verify", "consistency", "--alpha", "1,2"]).0,
            EXIT_USAGE
        );
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(call(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn verify_formats() {
        let (code, out, _) = call(&[
            "verify", "quad", "--model", "h2", "--trials", "5", "--format", "csv",
        ]);
        assert_eq!(code, EXIT_OK);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[0].starts_with("trial,resamples,"));
        let (code, out, _) = call(&[
            "verify", "quad", "--model", "h2", "--trials", "5", "--format", "human",
        ]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("spread") && out.contains("PASS"));
    }

    #[test]
    fn failing_tolerance_exits_two() {
        let (code, out, _) = call(&[
            "verify", "quad", "--model", "h1", "--trials", "3", "--tol", "spread=0",
        ]);
        assert_eq!(code, EXIT_FAILED);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["failure_count"], 3);
    }

    #[test]
    fn dims() {
        assert_eq!(parse_dims("4,4,4").unwrap(), [4, 4, 4]);
        assert!(parse_dims("4,4").is_err());
        assert!(parse_dims("0,1,1").is_err());
    }
}

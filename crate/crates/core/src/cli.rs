//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a numerical check failed, 2 usage error.
//! Settings resolve as built-in defaults, then an optional JSON config file,
//! then command-line flags.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{
    cross_representation, divergence_verdict, ehrenfest, p2_position, p4_position, tail_exponent,
    DEFAULT_CUTOFFS, DEFAULT_TAIL_WINDOW,
};
use crate::eigensolver::{solve_all, BoundState, SolverSettings};
use crate::engine::default_dx;
use crate::error::Error;
use crate::model::{PotentialSpec, WellKind, DEFAULT_LAMBDA, STUDY_A, STUDY_V0};
use crate::momentum::{
    parseval_residual, transform, weighted_curves, MomentumDistribution, DEFAULT_DP, DEFAULT_P_MAX,
    PARSEVAL_TOLERANCE,
};
use crate::suite::{
    run_suite, DxChoice, EHRENFEST_TOLERANCE, NORM_TOLERANCE, P2_CROSS_TOLERANCE,
    P4_CROSS_TOLERANCE,
};
use crate::wavefun::{assemble, norm_residual, WaveFunction};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "HALFWELL_THREADS";

pub const CSV_HEADER: &str = "p,re_phi,im_phi,I,p2I,p4I,p6I";

/// `⟨p⟩` and `⟨p³⟩` below this count as vanishing.
pub const ODD_MOMENT_TOLERANCE: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(
    name = "halfwell",
    version,
    about = "Bound states and momentum tails of 1D wells with a jump discontinuity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the bound-state spectrum as JSON.
    Solve(Flags),
    /// Write the momentum distribution of one state as CSV.
    Momdist(Flags),
    /// Position- and momentum-space moments with divergence verdicts.
    Moments(Flags),
    /// Power-law fit of the intensity tail.
    Tail(Flags),
    /// Moments plus norm, Parseval, Ehrenfest, cross-representation and node checks.
    Verify(Flags),
    /// Run every acceptance criterion and print a pass/fail table.
    Suite(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Well name: half-parabolic, half-triangular, half-eckart,
    /// half-exponential, fsw, delta, full-eckart.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    v0: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    /// Delta-well strength.
    #[arg(long)]
    lambda: Option<f64>,
    /// Index of the state in the energy-sorted spectrum.
    #[arg(long)]
    state: Option<usize>,
    #[arg(long)]
    pmax: Option<f64>,
    #[arg(long)]
    dp: Option<f64>,
    /// Position grid spacing (default min(a/2000, 1e-3·a)).
    #[arg(long)]
    dx: Option<f64>,
    /// Equally spaced cutoffs, comma separated.
    #[arg(long, value_delimiter = ',')]
    cutoffs: Option<Vec<f64>>,
    /// Tail-fit window as lo:hi.
    #[arg(long)]
    window: Option<String>,
    /// Primary output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the JSON report to this file.
    #[arg(long)]
    json: Option<PathBuf>,
    /// JSON file with default settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: WellKind,
    pub v0: f64,
    pub a: f64,
    pub lambda: f64,
    pub state: usize,
    pub pmax: f64,
    pub dp: f64,
    /// `None` selects the model's default spacing.
    pub dx: Option<f64>,
    pub cutoffs: Vec<f64>,
    pub window: (f64, f64),
    pub out: Option<PathBuf>,
    pub json: Option<PathBuf>,
    /// Format of the primary output of `momdist`.
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: WellKind::HalfParabolic,
            v0: STUDY_V0,
            a: STUDY_A,
            lambda: DEFAULT_LAMBDA,
            state: 0,
            pmax: DEFAULT_P_MAX,
            dp: DEFAULT_DP,
            dx: None,
            cutoffs: DEFAULT_CUTOFFS.to_vec(),
            window: DEFAULT_TAIL_WINDOW,
            out: None,
            json: None,
            format: Format::Csv,
        }
    }
}

/// Config-file layer: every key optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    model: Option<WellKind>,
    v0: Option<f64>,
    a: Option<f64>,
    lambda: Option<f64>,
    state: Option<usize>,
    pmax: Option<f64>,
    dp: Option<f64>,
    dx: Option<f64>,
    cutoffs: Option<Vec<f64>>,
    window: Option<(f64, f64)>,
    out: Option<PathBuf>,
    json: Option<PathBuf>,
    format: Option<Format>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Check(_) => EXIT_CHECK,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Check(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::NonFinite(_)
            | Error::Window(_)
            | Error::NoSuchState { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Check(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_window(s: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Usage(format!("window '{s}' is not of the form lo:hi"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    Ok((lo, hi))
}

impl RunConfig {
    fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let file: ConfigFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        macro_rules! take {
            ($($field:ident),*) => { $(if let Some(v) = file.$field { self.$field = v; })* };
        }
        take!(model, v0, a, lambda, state, pmax, dp, cutoffs, window, format);
        self.dx = file.dx.or(self.dx);
        self.out = file.out.or(self.out.take());
        self.json = file.json.or(self.json.take());
        Ok(())
    }

    fn resolve(flags: &Flags) -> CliResult<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &flags.config {
            cfg.apply_file(path)?;
        }
        if let Some(m) = &flags.model {
            cfg.model = m
                .parse()
                .map_err(|e: Error| CliError::Usage(e.to_string()))?;
        }
        macro_rules! take {
            ($($field:ident),*) => { $(if let Some(v) = flags.$field.clone() { cfg.$field = v; })* };
        }
        take!(v0, a, lambda, state, pmax, dp, cutoffs);
        if flags.dx.is_some() {
            cfg.dx = flags.dx;
        }
        if let Some(w) = &flags.window {
            cfg.window = parse_window(w)?;
        }
        if flags.out.is_some() {
            cfg.out = flags.out.clone();
        }
        if flags.json.is_some() {
            cfg.json = flags.json.clone();
        }
        Ok(cfg)
    }

    pub fn spec(&self) -> CliResult<PotentialSpec> {
        Ok(PotentialSpec::with_lambda(
            self.model,
            self.v0,
            self.a,
            self.lambda,
        )?)
    }

    pub fn dx_for(&self, spec: &PotentialSpec) -> f64 {
        self.dx.unwrap_or_else(|| default_dx(spec))
    }
}

/// C-style `%.12e`: explicit exponent sign and at least two exponent digits.
pub fn fmt_e(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn params_json(spec: &PotentialSpec) -> Value {
    let mut params = json!({ "v0": spec.v0, "a": spec.a });
    if spec.kind == WellKind::DeltaWell {
        params["lambda"] = json!(spec.lambda);
    }
    params
}

fn solve(cfg: &RunConfig) -> CliResult<(PotentialSpec, f64, Vec<BoundState>)> {
    let spec = cfg.spec()?;
    let dx = cfg.dx_for(&spec);
    if !(dx.is_finite() && dx > 0.0) {
        return Err(CliError::Usage("dx must be positive".into()));
    }
    let settings = SolverSettings::for_spec(&spec).with_dx(dx);
    let states = solve_all(&spec, &settings)?;
    Ok((spec, dx, states))
}

struct Prepared {
    spec: PotentialSpec,
    state: BoundState,
    wf: WaveFunction,
    md: MomentumDistribution,
}

fn prepare(cfg: &RunConfig) -> CliResult<Prepared> {
    let (spec, dx, states) = solve(cfg)?;
    let state = *states.get(cfg.state).ok_or(Error::NoSuchState {
        index: cfg.state,
        available: states.len(),
    })?;
    let wf = assemble(&spec, &state, dx)?;
    let md = transform(&wf, cfg.pmax, cfg.dp)?;
    Ok(Prepared {
        spec,
        state,
        wf,
        md,
    })
}

fn cmd_solve(cfg: &RunConfig) -> CliResult<Value> {
    let (spec, _, states) = solve(cfg)?;
    let list: Vec<Value> = states
        .iter()
        .map(|s| json!({ "n": s.n, "E": s.energy, "k": s.k, "residual": s.residual, "nodes": s.nodes }))
        .collect();
    Ok(json!({ "model": spec.kind.name(), "params": params_json(&spec), "states": list }))
}

fn momdist_csv(md: &MomentumDistribution) -> String {
    let mut out = String::with_capacity(120 * md.p.len());
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in weighted_curves(md) {
        let cols = [
            row.p,
            row.phi.re,
            row.phi.im,
            row.intensity,
            row.p2i,
            row.p4i,
            row.p6i,
        ];
        let cols: Vec<String> = cols.iter().map(|&v| fmt_e(v)).collect();
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

fn momdist_json(md: &MomentumDistribution) -> Value {
    let rows: Vec<Value> = weighted_curves(md)
        .iter()
        .map(|r| {
            json!({ "p": r.p, "re_phi": r.phi.re, "im_phi": r.phi.im, "I": r.intensity,
                    "p2I": r.p2i, "p4I": r.p4i, "p6I": r.p6i })
        })
        .collect();
    Value::Array(rows)
}

fn check_parseval(md: &MomentumDistribution) -> CliResult<()> {
    let residual = parseval_residual(md).residual;
    if residual > 10.0 * PARSEVAL_TOLERANCE {
        return Err(CliError::Check(format!(
            "parseval residual {residual:e} exceeds {:e}",
            10.0 * PARSEVAL_TOLERANCE
        )));
    }
    Ok(())
}

/// The analysis report shared by `moments`, `tail` and `verify`.
fn analysis_json(cfg: &RunConfig, prep: &Prepared) -> CliResult<Value> {
    let Prepared {
        spec,
        state,
        wf,
        md,
    } = prep;
    let cross = cross_representation(wf, spec, md, cfg.window)?;
    let r6 = divergence_verdict(md, 6, &cfg.cutoffs)?;
    let r4 = divergence_verdict(md, 4, &cfg.cutoffs)?;
    let m6: Vec<Value> = r6
        .cutoffs
        .iter()
        .zip(&r6.partials)
        .map(|(p, v)| json!({ "P": p, "value": v }))
        .collect();
    let eh = ehrenfest(wf, spec);
    let mut report = json!({
        "model": spec.kind.name(),
        "params": params_json(spec),
        "state_index": state.n,
        "E": state.energy,
        "p2_position": p2_position(wf, spec),
        "p2_momentum": cross.p2_momentum,
        "p4_position": p4_position(wf, spec).ok(),
        "p4_momentum_corrected": cross.p4_momentum_corrected,
        "m6_partials": m6,
        "growth_ratio": r6.growth_ratio,
        "verdict": r6.verdict.name(),
        "tail": Value::Null,
        "ehrenfest": { "interior": eh.interior, "boundary": eh.boundary, "relative": eh.relative },
        "order4": { "growth_ratio": r4.growth_ratio, "verdict": r4.verdict.name(),
                    "partials": r4.partials },
    });
    match tail_exponent(md, cfg.window) {
        Ok(t) => {
            report["tail"] = json!({ "window": [t.window.0, t.window.1], "slope": t.slope,
                                     "r2": t.r2, "c6": t.plateau_c6 });
        }
        Err(e) => report["tail_error"] = json!(e.to_string()),
    }
    Ok(report)
}

fn cmd_moments(cfg: &RunConfig) -> CliResult<Value> {
    let prep = prepare(cfg)?;
    analysis_json(cfg, &prep)
}

fn cmd_tail(cfg: &RunConfig) -> CliResult<Value> {
    let prep = prepare(cfg)?;
    tail_exponent(&prep.md, cfg.window)?;
    analysis_json(cfg, &prep)
}

fn check_entry(value: f64, limit: f64, pass: bool) -> Value {
    json!({ "value": value, "limit": limit, "pass": pass && value.is_finite() })
}

/// Returns the report and the names of failing checks.
fn cmd_verify(cfg: &RunConfig) -> CliResult<(Value, Vec<String>)> {
    let prep = prepare(cfg)?;
    let mut report = analysis_json(cfg, &prep)?;
    let Prepared {
        spec,
        state,
        wf,
        md,
    } = &prep;

    let norm = norm_residual(wf);
    let parseval = parseval_residual(md).residual;
    let eh = ehrenfest(wf, spec).relative;
    let cross = cross_representation(wf, spec, md, cfg.window)?;
    let odd = cross.p1.abs().max(cross.p3.abs());
    let cross_pass = cross.p2_relative < P2_CROSS_TOLERANCE
        && cross.p4_relative.is_none_or(|r| r < P4_CROSS_TOLERANCE)
        && odd < ODD_MOMENT_TOLERANCE;
    let checks = json!({
        "norm": check_entry(norm, NORM_TOLERANCE, norm < NORM_TOLERANCE),
        "parseval": check_entry(parseval, PARSEVAL_TOLERANCE, parseval < PARSEVAL_TOLERANCE),
        "ehrenfest": check_entry(eh, EHRENFEST_TOLERANCE, eh < EHRENFEST_TOLERANCE),
        "cross_representation": {
            "p2_relative": cross.p2_relative,
            "p4_relative": cross.p4_relative,
            "odd_moments": odd,
            "pass": cross_pass,
        },
        "node_law": { "nodes": state.nodes, "expected": state.n, "pass": state.nodes == state.n },
    });
    let failed = checks
        .as_object()
        .expect("object")
        .iter()
        .filter(|(_, v)| v["pass"] != json!(true))
        .map(|(k, _)| k.clone())
        .collect();
    report["checks"] = checks;
    Ok((report, failed))
}

fn write_to(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Writes the primary output to `--out` or `stdout`, and the JSON report to
/// `--json` when requested.
fn emit(cfg: &RunConfig, primary: &str, json: &Value, stdout: &mut dyn Write) -> CliResult<()> {
    match &cfg.out {
        Some(path) => write_to(path, primary)?,
        None => stdout
            .write_all(primary.as_bytes())
            .map_err(|e| CliError::Usage(format!("stdout: {e}")))?,
    }
    if let Some(path) = &cfg.json {
        write_to(path, &pretty(json))?;
    }
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer")))?;
    // A pool may already exist when called twice in one process; keep it.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> CliResult<()> {
    configure_threads()?;
    match command {
        Command::Solve(flags) => {
            let cfg = RunConfig::resolve(&flags)?;
            let v = cmd_solve(&cfg)?;
            emit(&cfg, &pretty(&v), &v, stdout)
        }
        Command::Momdist(flags) => {
            let cfg = RunConfig::resolve(&flags)?;
            let prep = prepare(&cfg)?;
            check_parseval(&prep.md)?;
            let v = momdist_json(&prep.md);
            let primary = match cfg.format {
                Format::Csv => momdist_csv(&prep.md),
                Format::Json => pretty(&v),
            };
            emit(&cfg, &primary, &v, stdout)
        }
        Command::Moments(flags) => {
            let cfg = RunConfig::resolve(&flags)?;
            let v = cmd_moments(&cfg)?;
            emit(&cfg, &pretty(&v), &v, stdout)
        }
        Command::Tail(flags) => {
            let cfg = RunConfig::resolve(&flags)?;
            let v = cmd_tail(&cfg)?;
            emit(&cfg, &pretty(&v), &v, stdout)
        }
        Command::Verify(flags) => {
            let cfg = RunConfig::resolve(&flags)?;
            let (v, failed) = cmd_verify(&cfg)?;
            emit(&cfg, &pretty(&v), &v, stdout)?;
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Check(format!(
                    "check failed: {}",
                    failed.join(", ")
                )))
            }
        }
        Command::Suite(flags) => {
            let cfg = RunConfig::resolve(&flags)?;
            let dx = match cfg.dx {
                Some(dx) if dx.is_finite() && dx > 0.0 => DxChoice::Fixed(dx),
                Some(_) => return Err(CliError::Usage("dx must be positive".into())),
                None => DxChoice::Default,
            };
            let report = run_suite(dx);
            let mut table = String::new();
            for c in &report.criteria {
                table.push_str(&c.to_string());
                table.push('\n');
            }
            let failing: Vec<String> = report
                .criteria
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.id.to_string())
                .collect();
            if failing.is_empty() {
                table.push_str("suite: PASS\n");
            } else {
                table.push_str(&format!("suite: FAIL (criteria {})\n", failing.join(", ")));
            }
            let v = serde_json::to_value(&report).expect("serializable");
            emit(&cfg, &table, &v, stdout)?;
            if failing.is_empty() {
                Ok(())
            } else {
                Err(CliError::Check(format!(
                    "failing criteria: {}",
                    failing.join(", ")
                )))
            }
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("halfwell: {}", e.message());
            e.exit_code()
        }
    }
}

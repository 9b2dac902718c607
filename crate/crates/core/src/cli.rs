//! Batch front end: a JSON sweep configuration in, a CSV table (or a JSON
//! document for single solves) out.
//!
//! ```json
//! {
//!   "command": "seq-example",
//!   "inputs": { "q_model": { "name": "power", "exponent": 1.0 } },
//!   "grid": { "start": 0.0, "stop": 1.0, "step": 0.1 },
//!   "output_path": "seq.csv",
//!   "tol": 1e-10
//! }
//! ```
//!
//! Exit codes: `0` success, `2` configuration or I/O error, `3` solver error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::approx::{self, Projector};
use crate::chicap;
use crate::constructions::{self, SeqExampleModel};
use crate::error::{Error, Result};
use crate::maxent;
use crate::qcore::{Complex64, DensityMatrix};
use crate::spectra::{ProbabilitySpectrum, QModel, SpectralSequence};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_TOL: f64 = 1e-8;
const MAX_TOL: f64 = 1e-2;
const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    FhSweep,
    VcSweep,
    ChicapSolve,
    SeqExample,
    Coupling,
    Orbit,
    ApproxSweep,
}

impl Command {
    fn sweeps(self) -> bool {
        !matches!(self, Command::ChicapSolve | Command::ApproxSweep)
    }
}

/// Inclusive arithmetic grid `start, start + step, ...` up to `stop`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    fn validate(&self) -> Result<()> {
        let bad = |path: &str, msg: String| Err(Error::ConfigInvalid { path: path.into(), msg });
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return bad("grid", "endpoints must be finite".into());
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad("grid.step", format!("must be positive, got {}", self.step));
        }
        if self.stop < self.start {
            return bad("grid", format!("empty range {}..{}", self.start, self.stop));
        }
        if (self.stop - self.start) / self.step >= MAX_GRID_POINTS as f64 {
            return bad("grid.step", format!("more than {MAX_GRID_POINTS} points"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step * (1.0 + 1e-12) + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// On-disk layout of a configuration document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    command: Command,
    #[serde(default = "empty_object")]
    inputs: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_path: Option<PathBuf>,
    #[serde(default = "default_tol")]
    tol: f64,
}

fn empty_object() -> Value {
    json!({})
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FhInputs {
    sequence: SpectralSequence,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VcInputs {
    spectrum: ProbabilitySpectrum,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChicapInputs {
    states: Option<Vec<DensityMatrix>>,
    states_file: Option<PathBuf>,
    #[serde(default = "default_max_iter")]
    max_iter: usize,
}

fn default_max_iter() -> usize {
    200_000
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeqInputs {
    q_model: QModel,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingInputs {}

/// Profiles `phi` on `[-pi, pi)` for orbit sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// `sqrt(2)` on `[0, pi)`, zero elsewhere.
    Step {},
    /// `exp(i n x)`.
    Harmonic { n: i64 },
    /// `sqrt(2 pi / width)` on `|x| < width / 2`.
    Box { width: f64 },
}

impl Profile {
    fn eval(&self, x: f64) -> Complex64 {
        match *self {
            Profile::Step {} => constructions::step_profile(x),
            Profile::Harmonic { n } => Complex64::from_polar(1.0, n as f64 * x),
            Profile::Box { width } => {
                let v = if x.abs() < 0.5 * width { (2.0 * std::f64::consts::PI / width).sqrt() } else { 0.0 };
                Complex64::new(v, 0.0)
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrbitInputs {
    profile: Profile,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ApproxInputs {
    /// Closed-form family with `Tr P_n rho = etas[n]`.
    etas: Option<Vec<f64>>,
    /// Explicit states with coordinate projectors onto the first `ranks[n]` levels.
    states: Option<Vec<DensityMatrix>>,
    ranks: Option<Vec<usize>>,
}

/// Command-specific inputs after validation.
#[derive(Clone, Debug)]
pub enum Inputs {
    FhSweep { sequence: SpectralSequence },
    VcSweep { spectrum: ProbabilitySpectrum },
    ChicapSolve { states: Option<Vec<DensityMatrix>>, states_file: Option<PathBuf>, max_iter: usize },
    SeqExample { q_model: QModel },
    Coupling,
    Orbit { profile: Profile },
    ApproxSweep { states: Vec<DensityMatrix>, projectors: Vec<Projector> },
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub command: Command,
    pub inputs: Inputs,
    pub grid: Option<Grid>,
    pub output_path: Option<PathBuf>,
    pub tol: f64,
    raw: RawSpec,
}

fn config_err(path: String, msg: impl ToString) -> Error {
    Error::ConfigInvalid { path: if path.is_empty() || path == "." { "<root>".into() } else { path }, msg: msg.to_string() }
}

fn from_value<T: DeserializeOwned>(v: &Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { prefix.to_string() } else { format!("{prefix}.{inner}") };
        config_err(path, e.inner())
    })
}

fn check_tol(tol: f64, path: &str) -> Result<()> {
    if !(tol > 0.0 && tol <= MAX_TOL) {
        return Err(config_err(path.into(), format!("must lie in (0, {MAX_TOL}], got {tol}")));
    }
    Ok(())
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<SweepSpec> {
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawSpec = serde_path_to_error::deserialize(&mut de).map_err(|e| config_err(e.path().to_string(), e.inner()))?;
    de.end().map_err(|e| config_err(String::new(), e))?;
    spec_from_raw(raw)
}

fn spec_from_raw(raw: RawSpec) -> Result<SweepSpec> {
    check_tol(raw.tol, "tol")?;
    match (&raw.grid, raw.command.sweeps()) {
        (Some(g), true) => g.validate()?,
        (None, true) => return Err(config_err("grid".into(), "required by this command")),
        (Some(_), false) => return Err(config_err("grid".into(), "not used by this command")),
        (None, false) => {}
    }
    let integral_grid = |name: &str, min: f64| -> Result<()> {
        let g = raw.grid.as_ref().expect("validated above");
        if g.points().iter().any(|x| x.fract() != 0.0 || *x < min) {
            return Err(config_err("grid".into(), format!("{name} must be integers >= {min}")));
        }
        Ok(())
    };
    let v = &raw.inputs;
    let inputs = match raw.command {
        Command::FhSweep => Inputs::FhSweep { sequence: from_value::<FhInputs>(v, "inputs")?.sequence },
        Command::VcSweep => Inputs::VcSweep { spectrum: from_value::<VcInputs>(v, "inputs")?.spectrum },
        Command::ChicapSolve => {
            let c: ChicapInputs = from_value(v, "inputs")?;
            if c.states.is_some() == c.states_file.is_some() {
                return Err(config_err("inputs".into(), "give exactly one of `states` and `states_file`"));
            }
            Inputs::ChicapSolve { states: c.states, states_file: c.states_file, max_iter: c.max_iter }
        }
        Command::SeqExample => {
            let g = raw.grid.as_ref().expect("validated above");
            if g.start < 0.0 || g.stop > 1.0 {
                return Err(config_err("grid".into(), "eps must lie in [0, 1]"));
            }
            Inputs::SeqExample { q_model: from_value::<SeqInputs>(v, "inputs")?.q_model }
        }
        Command::Coupling => {
            from_value::<CouplingInputs>(v, "inputs")?;
            integral_grid("dimensions", 1.0)?;
            Inputs::Coupling
        }
        Command::Orbit => {
            integral_grid("harmonic counts", 0.0)?;
            Inputs::Orbit { profile: from_value::<OrbitInputs>(v, "inputs")?.profile }
        }
        Command::ApproxSweep => {
            let a: ApproxInputs = from_value(v, "inputs")?;
            let invalid = |e: Error| config_err("inputs".into(), e);
            match (a.etas, a.states, a.ranks) {
                (Some(etas), None, None) => {
                    let (states, projectors) = approx::decreasing_convergence_family(&etas).map_err(invalid)?;
                    Inputs::ApproxSweep { states, projectors }
                }
                (None, Some(states), Some(ranks)) => {
                    let d = states.first().map(|s| s.dim()).ok_or_else(|| config_err("inputs.states".into(), "empty"))?;
                    if states.iter().any(|s| s.dim() != d) {
                        return Err(config_err("inputs.states".into(), "states differ in dimension"));
                    }
                    if ranks.is_empty() || ranks.windows(2).any(|w| w[1] < w[0]) || ranks[ranks.len() - 1] > d {
                        return Err(config_err("inputs.ranks".into(), format!("must be nonempty, nondecreasing and at most {d}")));
                    }
                    let projectors = ranks
                        .iter()
                        .map(|&r| Projector::coordinate(d, &(0..r).collect::<Vec<_>>()))
                        .collect::<Result<Vec<_>>>()
                        .map_err(invalid)?;
                    Inputs::ApproxSweep { states, projectors }
                }
                _ => return Err(config_err("inputs".into(), "give either `etas`, or `states` with `ranks`")),
            }
        }
    };
    Ok(SweepSpec { command: raw.command, inputs, grid: raw.grid, output_path: raw.output_path.clone(), tol: raw.tol, raw })
}

/// Reads a configuration file; a relative `states_file` is resolved against
/// the configuration's directory.
pub fn load_config(path: &Path) -> Result<SweepSpec> {
    let text = fs::read_to_string(path)?;
    let mut spec = parse_config(&text)?;
    if let Inputs::ChicapSolve { states_file: Some(f), .. } = &mut spec.inputs {
        if f.is_relative() {
            if let Some(dir) = path.parent() {
                *f = dir.join(&*f);
            }
        }
    }
    Ok(spec)
}

impl SweepSpec {
    /// Replaces the tolerance, as the `--tol` flag does.
    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        check_tol(tol, "--tol")?;
        self.tol = tol;
        self.raw.tol = tol;
        Ok(self)
    }

    pub fn with_output(mut self, path: PathBuf) -> Self {
        self.raw.output_path = Some(path.clone());
        self.output_path = Some(path);
        self
    }

    /// Canonical one-line JSON of the configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.raw).expect("configuration serializes")
    }
}

/// Twelve significant digits, printed as the shortest decimal that
/// round-trips the rounded value (exponent form outside `[1e-5, 1e16)`).
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let a = rounded.abs();
    let s = if a != 0.0 && !(1e-5..1e16).contains(&a) { format!("{rounded:e}") } else { format!("{rounded}") };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// A finished table: column names and rows in grid order.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Extra `#` lines written after the configuration header.
    pub notes: Vec<String>,
}

impl Table {
    pub fn to_csv(&self, spec: &SweepSpec) -> String {
        let mut out = format!("# qentcap {VERSION}\n# config: {}\n", spec.to_json());
        for n in &self.notes {
            out.push_str(&format!("# {n}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Output of one run.
#[derive(Clone, Debug)]
pub enum Output {
    Csv(Table),
    Json(Value),
}

impl Output {
    pub fn render(&self, spec: &SweepSpec) -> String {
        match self {
            Output::Csv(t) => t.to_csv(spec),
            Output::Json(v) => {
                let doc = json!({
                    "version": VERSION,
                    "config": serde_json::from_str::<Value>(&spec.to_json()).expect("valid JSON"),
                    "result": v,
                });
                serde_json::to_string_pretty(&doc).expect("result serializes") + "\n"
            }
        }
    }
}

fn sweep<F>(grid: &Grid, workers: usize, row: F) -> Result<Vec<Vec<String>>>
where
    F: Fn(f64) -> Result<Vec<String>> + Sync,
{
    let points = grid.points();
    if workers <= 1 {
        return points.into_iter().map(&row).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ValidationFailed(format!("thread pool: {e}")))?;
    pool.install(|| points.into_par_iter().map(&row).collect::<Vec<_>>()).into_iter().collect()
}

fn read_states(path: &Path) -> Result<Vec<DensityMatrix>> {
    let text = fs::read_to_string(path)?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de)
        .map_err(|e| config_err(format!("{}:{}", path.display(), e.path()), e.inner()))
}

/// Runs a validated configuration without touching the filesystem (except
/// for reading a `states_file`).
pub fn execute(spec: &SweepSpec, workers: usize) -> Result<Output> {
    let tol = spec.tol;
    let grid = spec.grid.as_ref();
    let table = |columns: Vec<&'static str>, rows: Vec<Vec<String>>| Output::Csv(Table { columns, rows, notes: Vec::new() });
    Ok(match &spec.inputs {
        Inputs::FhSweep { sequence } => {
            let rows = sweep(grid.expect("validated"), workers, |h| {
                let p = maxent::sup_entropy_k(sequence, h)?;
                Ok(vec![
                    fmt_float(h),
                    fmt_opt(p.lam_star),
                    fmt_float(p.sup_entropy),
                    p.branch.as_str().into(),
                    p.gibbs_exists.to_string(),
                ])
            })?;
            table(vec!["constraint", "lam_star", "sup_entropy", "branch", "gibbs_exists"], rows)
        }
        Inputs::VcSweep { spectrum } => {
            let rows = sweep(grid.expect("validated"), workers, |c| {
                let (lam_e, sup, branch_e) = match maxent::sup_entropy_v(spectrum, c) {
                    Ok(p) => (p.lam_star, p.sup_entropy, p.entropy_branch.map(|b| b.as_str()).unwrap_or_default()),
                    Err(Error::UnboundedEntropy) => (None, Some(f64::INFINITY), "unbounded"),
                    Err(e) => return Err(e),
                };
                let cap = maxent::chi_capacity_v(spectrum, c, tol)?;
                Ok(vec![
                    fmt_float(c),
                    fmt_opt(lam_e),
                    fmt_opt(sup),
                    branch_e.into(),
                    fmt_opt(cap.lam_star),
                    fmt_opt(cap.chi_capacity),
                    cap.capacity_branch.map(|b| b.as_str()).unwrap_or_default().into(),
                ])
            })?;
            table(
                vec!["constraint", "lam_entropy", "sup_entropy", "entropy_branch", "lam_capacity", "chi_capacity", "capacity_branch"],
                rows,
            )
        }
        Inputs::ChicapSolve { states, states_file, max_iter } => {
            let loaded;
            let states = match (states, states_file) {
                (Some(s), _) => s,
                (None, Some(f)) => {
                    loaded = read_states(f)?;
                    &loaded
                }
                (None, None) => unreachable!("validated"),
            };
            let res = chicap::solve_capacity(states, tol, *max_iter)?;
            Output::Json(serde_json::to_value(&res)?)
        }
        Inputs::SeqExample { q_model } => {
            let rows = sweep(grid.expect("validated"), workers, |eps| {
                let model = SeqExampleModel { q_model: *q_model, eps, n_range: (2, 2) };
                let r = constructions::seq_example_capacity(&model, tol)?;
                Ok(vec![
                    fmt_float(eps),
                    fmt_opt(r.lam_eps),
                    fmt_opt(r.pi_eps),
                    fmt_opt(r.capacity),
                    fmt_float(r.cond46_lhs),
                    r.has_optimal_ensemble.to_string(),
                ])
            })?;
            table(vec!["eps", "lam_eps", "pi_eps", "capacity", "cond46_lhs", "has_optimal_ensemble"], rows)
        }
        Inputs::Coupling => {
            let rows = sweep(grid.expect("validated"), workers, |d| {
                let r = constructions::coupling_set_capacity(d as usize)?;
                Ok(vec![
                    (d as usize).to_string(),
                    fmt_float(r.quantum),
                    fmt_float(r.classical),
                    fmt_float(r.quantum_solved),
                    fmt_float(r.classical_solved),
                ])
            })?;
            table(vec!["d", "quantum", "classical", "quantum_solved", "classical_solved"], rows)
        }
        Inputs::Orbit { profile } => {
            let rows = sweep(grid.expect("validated"), workers, |n| {
                let r = constructions::rotation_orbit_capacity(&|x| profile.eval(x), n as usize)?;
                Ok(vec![(n as usize).to_string(), fmt_float(r.capacity), fmt_float(r.truncated_mass)])
            })?;
            table(vec!["n_harmonics", "capacity", "truncated_mass"], rows)
        }
        Inputs::ApproxSweep { states, projectors } => {
            let s = approx::truncated_capacity_sweep(states, projectors, tol)?;
            let rows = s
                .reports
                .iter()
                .map(|r| {
                    vec![
                        r.projector_rank.to_string(),
                        fmt_float(r.eta),
                        fmt_float(r.projected_capacity.capacity),
                        fmt_float(r.projected_capacity.gap),
                    ]
                })
                .collect();
            Output::Csv(Table {
                columns: vec!["rank", "eta", "capacity", "gap"],
                rows,
                notes: vec![format!("full_capacity: {}", fmt_float(s.full_capacity.capacity))],
            })
        }
    })
}

/// Executes and writes the output file.
pub fn run(spec: &SweepSpec, workers: usize) -> Result<PathBuf> {
    let path = spec
        .output_path
        .clone()
        .ok_or_else(|| config_err("output_path".into(), "required (or pass --out)"))?;
    let out = execute(spec, workers)?;
    let mut f = fs::File::create(&path)?;
    f.write_all(out.render(spec).as_bytes())?;
    Ok(path)
}

#[derive(Debug, Parser)]
#[command(name = "qentcap", version, about = "Entropy and chi-capacity sweeps")]
pub struct Args {
    /// JSON configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output file; overrides `output_path` in the configuration.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Threads used to evaluate grid points.
    #[arg(long, value_name = "N", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: u32,
    /// Solver tolerance; overrides `tol` in the configuration.
    #[arg(long, value_name = "X")]
    pub tol: Option<f64>,
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ConfigInvalid { .. } | Error::Io(_) | Error::Json(_) => 2,
        _ => 3,
    }
}

fn run_args(args: &Args) -> Result<PathBuf> {
    let mut spec = load_config(&args.config)?;
    if let Some(t) = args.tol {
        spec = spec.with_tol(t)?;
    }
    if let Some(o) = &args.out {
        spec = spec.with_output(o.clone());
    }
    run(&spec, args.workers as usize)
}

/// Entry point of the binary; returns the exit code.
pub fn main() -> i32 {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_args(&args) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            exit_code(&e)
        }
    }
}

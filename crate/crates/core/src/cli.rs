//! Scenario-driven commands behind the `cbf-compat` binary.
//!
//! Exit codes: 0 when every checked property holds, 1 when a property fails
//! or a run aborts, 2 for usage and configuration errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{
    lipschitz_diagnostic, verify_cbf_stabilizable, verify_psi, CertReport, MechanicalLoop,
    RhoTuning,
};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::scenario::{Scenario, ScenarioConfig};
use crate::sim::{integrate, trajectory_metrics, write_csv, TrajectoryMetrics};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_PROPERTY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Tolerance on `min h` and `min c` for a run to count as safe.
pub const SAFETY_TOL: f64 = 1e-6;
/// Largest per-step increase of `V` accepted in unperturbed runs.
pub const MONOTONICITY_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "cbf-compat", version, about = "Certify and simulate barrier-function safety filters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grid-certify the scenario and write certify.json.
    Certify(CommonArgs),
    /// Tune the augmentation gain rho.
    TuneRho(CommonArgs),
    /// Simulate from the given or configured initial states.
    Simulate(SimulateArgs),
    /// Simulate over a grid of initial states and aggregate the results.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to the scenario's `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Initial state as a comma-separated list `q1,..,qn,v1,..,vn`; repeatable.
    #[arg(long, value_delimiter = ';')]
    pub x0: Vec<String>,
    /// Simulate without a passing certificate.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Draw initial states uniformly from the sweep box instead of using
    /// its grid points.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Maps an error to its exit code.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::Io(_)
        | Error::Dimension { .. }
        | Error::InvalidParameter(_)
        | Error::EmptyGrid
        | Error::EmptySweep => EXIT_USAGE,
        _ => EXIT_PROPERTY,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn dispatch(command: &Command) -> Result<i32> {
    match command {
        Command::Certify(args) => {
            let (cfg, out) = load(args)?;
            let doc = cmd_certify(&cfg, Some(&out))?;
            println!("{}", serde_json::to_string_pretty(&doc.summary())?);
            Ok(if doc.pass { EXIT_PASS } else { EXIT_PROPERTY })
        }
        Command::TuneRho(args) => {
            let (cfg, out) = load(args)?;
            let tuning = cmd_tune_rho(&cfg, Some(&out))?;
            println!("{}", serde_json::to_string_pretty(&tuning)?);
            Ok(EXIT_PASS)
        }
        Command::Simulate(args) => {
            let (cfg, out) = load(&args.common)?;
            let x0 = args
                .x0
                .iter()
                .map(|s| parse_state(s))
                .collect::<Result<Vec<_>>>()?;
            let summary = cmd_simulate(&cfg, &x0, &out, args.force)?;
            for row in &summary.runs {
                println!("{}", row.describe());
            }
            Ok(if summary.pass { EXIT_PASS } else { EXIT_PROPERTY })
        }
        Command::Sweep(args) => {
            let (cfg, out) = load(&args.common)?;
            let report = cmd_sweep(&cfg, &out, args.seed)?;
            for r in &report.rejected {
                eprintln!("rejected x0 = {:?}: {}", r.state, r.reason);
            }
            println!(
                "{}/{} runs passed ({} rejected at intake)",
                report.passed,
                report.runs.len(),
                report.rejected.len()
            );
            Ok(if report.pass { EXIT_PASS } else { EXIT_PROPERTY })
        }
    }
}

fn load(args: &CommonArgs) -> Result<(ScenarioConfig, PathBuf)> {
    let cfg = ScenarioConfig::load(&args.config)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    Ok((cfg, out))
}

/// Parses `q1,..,qn,v1,..,vn`.
pub fn parse_state(text: &str) -> Result<DVector<f64>> {
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("cannot parse {s:?} in x0 {text:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DVector::from_vec(values))
}

fn write_json<T: Serialize>(dir: &Path, file: &str, value: &T) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(file), serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Contents of `certify.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyDocument {
    pub scenario: ScenarioConfig,
    pub pass: bool,
    #[serde(skip_deserializing)]
    pub reports: Vec<CertReport>,
    #[serde(skip_deserializing)]
    pub rho_tuning: Option<RhoTuning>,
    #[serde(default)]
    pub rho_error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct CertifySummary<'a> {
    pub scenario: &'a str,
    pub pass: bool,
    pub checks: Vec<CheckSummary<'a>>,
    pub rho: Option<f64>,
    pub rho_error: Option<&'a str>,
}

#[derive(Debug, Serialize)]
pub struct CheckSummary<'a> {
    pub check: &'a str,
    pub pass: bool,
    pub nu: f64,
    pub evaluated: usize,
    pub violations: usize,
    pub first_counterexample: Option<&'a crate::certify::Counterexample>,
}

impl CertifyDocument {
    pub fn summary(&self) -> CertifySummary<'_> {
        CertifySummary {
            scenario: &self.scenario.name,
            pass: self.pass,
            checks: self
                .reports
                .iter()
                .map(|r| CheckSummary {
                    check: &r.check,
                    pass: r.pass,
                    nu: r.nu,
                    evaluated: r.evaluated,
                    violations: r.violations,
                    first_counterexample: r.counterexamples.first(),
                })
                .collect(),
            rho: self.rho_tuning.as_ref().map(|t| t.rho),
            rho_error: self.rho_error.as_deref(),
        }
    }
}

/// Runs the Lipschitz diagnostic, then either full-state
/// CBF-stabilizability or, for the augmented filter, the psi condition and
/// rho tuning. Writes `certify.json` to `out` when given.
pub fn cmd_certify(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<CertifyDocument> {
    let scn = cfg.build()?;
    let ctrl = scn.controller_with_rho(scn.rho.unwrap_or(1.0))?;
    let problem = MechanicalLoop::new(&ctrl, &scn.model);
    let mut reports = vec![lipschitz_diagnostic(&problem, scn.nu, &scn.state_grid)?];
    let mut rho_tuning = None;
    let mut rho_error = None;
    if scn.augmented {
        reports.push(verify_psi(
            &scn.barrier,
            &scn.model,
            &scn.nominal,
            scn.nu,
            &scn.q_grid,
        )?);
        match scn.tune_rho() {
            Ok(t) => rho_tuning = Some(t),
            Err(e @ Error::PsiNotPositive { .. }) => rho_error = Some(e.to_string()),
            Err(e) => return Err(e),
        }
    } else {
        reports.push(verify_cbf_stabilizable(&problem, scn.nu, &scn.state_grid)?);
    }
    let pass = reports.iter().all(|r| r.pass) && rho_error.is_none();
    if let (Some(t), Some(r)) = (&rho_tuning, reports.last_mut()) {
        r.rho = Some(t.rho);
    }
    let doc = CertifyDocument {
        scenario: cfg.clone(),
        pass,
        reports,
        rho_tuning,
        rho_error,
    };
    if let Some(dir) = out {
        write_json(dir, "certify.json", &doc)?;
    }
    Ok(doc)
}

pub fn cmd_tune_rho(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<RhoTuning> {
    let scn = cfg.build()?;
    if !scn.barrier.is_high_order() {
        return Err(Error::Config("rho tuning needs a high-order barrier".into()));
    }
    let tuning = scn.tune_rho()?;
    if let Some(dir) = out {
        write_json(dir, "rho.json", &tuning)?;
    }
    Ok(tuning)
}

/// Outcome of one simulated initial state.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub index: usize,
    pub x0: Vec<f64>,
    pub pass: bool,
    pub metrics: Option<TrajectoryMetrics>,
    pub failure: Option<String>,
    pub csv: Option<PathBuf>,
}

impl RunSummary {
    pub fn describe(&self) -> String {
        let status = if self.pass { "ok  " } else { "FAIL" };
        match (&self.metrics, &self.failure) {
            (_, Some(f)) => format!("{status} x0={:?} {f}", self.x0),
            (Some(m), None) => format!(
                "{status} x0={:?} min_h={:.3e} min_c={} max_dV={:.3e} |x(T)|={:.3e} max_supply={:.3e}",
                self.x0,
                m.min_h,
                m.min_c.map_or("-".into(), |c| format!("{c:.3e}")),
                m.max_lyapunov_increase,
                m.terminal_norm,
                m.max_supply_residual
            ),
            (None, None) => format!("{status} x0={:?}", self.x0),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub pass: bool,
    pub runs: Vec<RunSummary>,
}

/// Whether a finished run meets the safety tolerance and, when unperturbed,
/// Lyapunov monotonicity.
pub fn run_passes(m: &TrajectoryMetrics, perturbed: bool) -> bool {
    m.min_h >= -SAFETY_TOL
        && m.min_c.is_none_or(|c| c >= -SAFETY_TOL)
        && (perturbed || m.max_lyapunov_increase <= MONOTONICITY_TOL)
}

fn certified(cfg: &ScenarioConfig, out: &Path) -> bool {
    let Ok(text) = fs::read_to_string(out.join("certify.json")) else {
        return false;
    };
    serde_json::from_str::<CertifyDocument>(&text)
        .is_ok_and(|doc| doc.pass && doc.scenario == *cfg)
}

fn simulate_all(scn: &Scenario, x0s: &[DVector<f64>], out: Option<&Path>) -> Result<Vec<RunSummary>> {
    let ctrl = scn.controller()?;
    let perturbed = scn.sim.disturbance.is_some();
    x0s.par_iter()
        .enumerate()
        .map(|(index, x0)| {
            let mut row = RunSummary {
                index,
                x0: x0.iter().copied().collect(),
                pass: false,
                metrics: None,
                failure: None,
                csv: None,
            };
            let traj = match integrate(&scn.model, &ctrl, x0, &scn.sim) {
                Ok(t) => t,
                Err(f) => {
                    row.metrics = trajectory_metrics(&f.partial);
                    row.failure = Some(f.to_string());
                    f.partial
                }
            };
            if let Some(dir) = out {
                let path = dir.join(format!("trajectory_{index:03}.csv"));
                write_csv(&traj, fs::File::create(&path)?)?;
                row.csv = Some(path);
            }
            if row.failure.is_none() {
                row.metrics = trajectory_metrics(&traj);
                row.pass = row.metrics.as_ref().is_some_and(|m| run_passes(m, perturbed));
            }
            Ok(row)
        })
        .collect()
}

fn write_summary_csv(path: &Path, runs: &[RunSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "index",
        "x0",
        "pass",
        "min_h",
        "min_c",
        "max_lyapunov_increase",
        "terminal_norm",
        "max_supply_residual",
        "nominal_steps",
        "filtered_steps",
        "augmented_steps",
        "failure",
    ])?;
    for r in runs {
        let x0 = r
            .x0
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        let mut rec = vec![r.index.to_string(), x0, r.pass.to_string()];
        match &r.metrics {
            Some(m) => rec.extend([
                m.min_h.to_string(),
                m.min_c.map(|c| c.to_string()).unwrap_or_default(),
                m.max_lyapunov_increase.to_string(),
                m.terminal_norm.to_string(),
                m.max_supply_residual.to_string(),
                m.branch_counts[0].to_string(),
                m.branch_counts[1].to_string(),
                m.branch_counts[2].to_string(),
            ]),
            None => rec.extend(std::iter::repeat_n(String::new(), 8)),
        }
        rec.push(r.failure.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Simulates every initial state (the configured ones when `x0` is empty),
/// writing one CSV per run plus `summary.csv`. Requires a passing
/// `certify.json` for this exact scenario in `out` unless `force` is set.
pub fn cmd_simulate(
    cfg: &ScenarioConfig,
    x0: &[DVector<f64>],
    out: &Path,
    force: bool,
) -> Result<SimulationSummary> {
    let scn = cfg.build()?;
    if !force && !certified(cfg, out) {
        return Err(Error::Config(format!(
            "no passing certificate for this scenario in {}; run `certify` first or pass --force",
            out.display()
        )));
    }
    let x0s = if x0.is_empty() {
        scn.initial_states.clone()
    } else {
        x0.to_vec()
    };
    if x0s.is_empty() {
        return Err(Error::Config("no initial states given".into()));
    }
    for x in &x0s {
        crate::error::check_len("x0", x.len(), 4)?;
    }
    fs::create_dir_all(out)?;
    let runs = simulate_all(&scn, &x0s, Some(out))?;
    write_summary_csv(&out.join("summary.csv"), &runs)?;
    Ok(SimulationSummary {
        pass: runs.iter().all(|r| r.pass),
        runs,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Rejection {
    pub state: Vec<f64>,
    pub reason: String,
}

/// Aggregate result of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub pass: bool,
    pub passed: usize,
    pub rejected: Vec<Rejection>,
    pub min_h: f64,
    pub min_c: Option<f64>,
    pub max_lyapunov_increase: f64,
    pub max_terminal_norm: f64,
    pub runs: Vec<RunSummary>,
}

/// Reason an initial state is outside `{V <= nu}` ∩ safe set, if it is.
pub fn intake_rejection(scn: &Scenario, x: &DVector<f64>) -> Option<String> {
    if x.len() != 4 || x.iter().any(|v| !v.is_finite()) {
        return Some("not a finite state of dimension 4".into());
    }
    if !scn.barrier.contains(x) {
        return Some(format!("outside the safe set (h = {:.3e})", scn.barrier.eval_h(x)));
    }
    let v = scn.nominal.lyapunov(&scn.model, x);
    if v > scn.nu {
        return Some(format!("V = {v:.4} exceeds nu = {}", scn.nu));
    }
    None
}

fn random_states(grid: &GridSpec, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..grid.len())
        .map(|_| {
            DVector::from_iterator(
                grid.dim(),
                grid.axes.iter().map(|a| {
                    if a.hi > a.lo {
                        rng.gen_range(a.lo..=a.hi)
                    } else {
                        a.lo
                    }
                }),
            )
        })
        .collect()
}

/// Simulates over the scenario's sweep grid, or over as many seeded random
/// draws from its bounding box. States outside `{V <= nu}` ∩ safe set are
/// rejected before simulation.
pub fn cmd_sweep(cfg: &ScenarioConfig, out: &Path, seed: Option<u64>) -> Result<SweepReport> {
    let scn = cfg.build()?;
    let grid = scn
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("the scenario has no sweep grid".into()))?;
    let candidates: Vec<DVector<f64>> = match seed {
        Some(s) => random_states(&grid, s),
        None => grid.points().collect(),
    };
    sweep_states(&scn, &candidates, Some(out))
}

/// Intake filtering, concurrent simulation and aggregation for `sweep`.
pub fn sweep_states(
    scn: &Scenario,
    candidates: &[DVector<f64>],
    out: Option<&Path>,
) -> Result<SweepReport> {
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for x in candidates {
        match intake_rejection(scn, x) {
            Some(reason) => rejected.push(Rejection {
                state: x.iter().copied().collect(),
                reason,
            }),
            None => accepted.push(x.clone()),
        }
    }
    if accepted.is_empty() {
        return Err(Error::EmptySweep);
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    let runs = simulate_all(scn, &accepted, out)?;
    let metrics: Vec<&TrajectoryMetrics> = runs.iter().filter_map(|r| r.metrics.as_ref()).collect();
    let report = SweepReport {
        pass: runs.iter().all(|r| r.pass),
        passed: runs.iter().filter(|r| r.pass).count(),
        rejected,
        min_h: metrics.iter().map(|m| m.min_h).fold(f64::INFINITY, f64::min),
        min_c: metrics.iter().filter_map(|m| m.min_c).reduce(f64::min),
        max_lyapunov_increase: metrics
            .iter()
            .map(|m| m.max_lyapunov_increase)
            .fold(f64::NEG_INFINITY, f64::max),
        max_terminal_norm: metrics.iter().map(|m| m.terminal_norm).fold(0.0, f64::max),
        runs,
    };
    if let Some(dir) = out {
        write_summary_csv(&dir.join("sweep_summary.csv"), &report.runs)?;
        write_json(dir, "sweep.json", &report)?;
    }
    Ok(report)
}

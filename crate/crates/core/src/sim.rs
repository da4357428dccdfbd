//! Fixed-step closed-loop simulation with per-step telemetry.

use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;

use crate::controller::{BranchLabel, CompatController};
use crate::dynamics::{forward_dynamics, join_state, split_state, MechanicalModel};
use crate::error::{check_len, Error, Result};

/// Matched sinusoidal disturbance `d_i(t) = A_i sin(w_i t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSpec {
    pub amplitudes: Vec<f64>,
    pub frequencies: Vec<f64>,
}

impl DisturbanceSpec {
    pub fn validate(&self, input_dim: usize) -> Result<()> {
        check_len("disturbance amplitudes", self.amplitudes.len(), input_dim)?;
        check_len("disturbance frequencies", self.frequencies.len(), input_dim)?;
        if self
            .amplitudes
            .iter()
            .chain(&self.frequencies)
            .all(|p| p.is_finite())
        {
            Ok(())
        } else {
            Err(Error::InvalidParameter("disturbance parameters must be finite".into()))
        }
    }
}

pub fn matched_disturbance(spec: &DisturbanceSpec, t: f64) -> DVector<f64> {
    DVector::from_iterator(
        spec.amplitudes.len(),
        spec.amplitudes
            .iter()
            .zip(&spec.frequencies)
            .map(|(a, w)| a * (w * t).sin()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub integrator: Integrator,
    pub disturbance: Option<DisturbanceSpec>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 30.0,
            integrator: Integrator::Rk4,
            disturbance: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, input_dim: usize) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0 && self.horizon >= self.dt) {
            return Err(Error::InvalidParameter(format!(
                "need dt > 0 and horizon >= dt, got dt = {}, horizon = {}",
                self.dt, self.horizon
            )));
        }
        if let Some(d) = &self.disturbance {
            d.validate(input_dim)?;
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// Telemetry logged at one time stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: DVector<f64>,
    /// Safe control `u*` (without disturbance).
    pub control: DVector<f64>,
    pub h: f64,
    pub lyapunov: f64,
    pub z: f64,
    /// Constraint value and rate; `None` for relative-degree-one barriers.
    pub c: Option<f64>,
    pub c_dot: Option<f64>,
    pub psi: Option<f64>,
    pub supply_residual: f64,
    pub branch: BranchLabel,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub dof: usize,
    pub samples: Vec<Sample>,
}

/// A simulation that stopped early; `partial` holds every completed sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SimFailure {
    pub partial: Trajectory,
    pub state: Vec<f64>,
    pub cause: Error,
}

impl std::fmt::Display for SimFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "simulation aborted after {} samples at x = {:?}: {}",
            self.partial.samples.len(),
            self.state,
            self.cause
        )
    }
}

impl std::error::Error for SimFailure {}

/// Recomputes the telemetry of one state.
pub fn observe(
    model: &dyn MechanicalModel,
    ctrl: &CompatController,
    t: f64,
    x: &DVector<f64>,
) -> Result<Sample> {
    let n = model.dof();
    let out = ctrl.control(model, x)?;
    let q = x.rows(0, n).into_owned();
    let psi = if ctrl.barrier.is_high_order() {
        Some(crate::certify::psi(&ctrl.barrier, model, &ctrl.nominal, &q)?)
    } else {
        None
    };
    Ok(Sample {
        t,
        h: ctrl.barrier.eval_h(x),
        lyapunov: ctrl.lyapunov(model, x),
        z: out.z,
        c: ctrl.barrier.constraint_value(&q),
        c_dot: ctrl.barrier.constraint_rate(x),
        psi,
        supply_residual: ctrl.supply_rate_residual(model, x, &out.control)?,
        branch: out.branch,
        control: out.control,
        state: x.clone(),
    })
}

fn closed_loop_rate(
    model: &dyn MechanicalModel,
    ctrl: &CompatController,
    disturbance: Option<&DisturbanceSpec>,
    t: f64,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let (q, v) = split_state(x, model.dof());
    let mut u = ctrl.control(model, x)?.control;
    if let Some(d) = disturbance {
        u += matched_disturbance(d, t);
    }
    Ok(join_state(&v, &forward_dynamics(model, &q, &v, &u)?))
}

fn rk4_step(
    model: &dyn MechanicalModel,
    ctrl: &CompatController,
    disturbance: Option<&DisturbanceSpec>,
    t: f64,
    dt: f64,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let k1 = closed_loop_rate(model, ctrl, disturbance, t, x)?;
    let k2 = closed_loop_rate(model, ctrl, disturbance, t + 0.5 * dt, &(x + &k1 * (0.5 * dt)))?;
    let k3 = closed_loop_rate(model, ctrl, disturbance, t + 0.5 * dt, &(x + &k2 * (0.5 * dt)))?;
    let k4 = closed_loop_rate(model, ctrl, disturbance, t + dt, &(x + &k3 * dt))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Integrates `x' = f(x) + g(x) (u*(x) + d(t))` with the control re-evaluated
/// at every stage. One sample is logged per step from the step-start state,
/// plus one at the horizon.
pub fn integrate(
    model: &dyn MechanicalModel,
    ctrl: &CompatController,
    x0: &DVector<f64>,
    cfg: &SimConfig,
) -> std::result::Result<Trajectory, SimFailure> {
    let n = model.dof();
    let mut traj = Trajectory {
        dof: n,
        samples: Vec::with_capacity(cfg.steps() + 1),
    };
    let fail = |traj: Trajectory, x: &DVector<f64>, cause: Error| SimFailure {
        partial: traj,
        state: x.iter().copied().collect(),
        cause,
    };
    if let Err(e) = check_len("initial state", x0.len(), 2 * n).and_then(|_| cfg.validate(n)) {
        return Err(fail(traj, x0, e));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(fail(traj, x0, Error::NonFinite { t: 0.0 }));
    }
    let Integrator::Rk4 = cfg.integrator;
    let steps = cfg.steps();
    let mut x = x0.clone();
    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        match observe(model, ctrl, t, &x) {
            Ok(s) => traj.samples.push(s),
            Err(e) => return Err(fail(traj, &x, e)),
        }
        if k == steps {
            break;
        }
        x = match rk4_step(model, ctrl, cfg.disturbance.as_ref(), t, cfg.dt, &x) {
            Ok(next) if next.iter().all(|v| v.is_finite()) => next,
            Ok(_) => return Err(fail(traj, &x, Error::NonFinite { t: t + cfg.dt })),
            Err(e) => return Err(fail(traj, &x, e)),
        };
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMetrics {
    pub samples: usize,
    pub min_h: f64,
    pub min_c: Option<f64>,
    /// Largest `V(t_{k+1}) - V(t_k)`; `-inf` for a single sample.
    pub max_lyapunov_increase: f64,
    pub terminal_norm: f64,
    pub max_supply_residual: f64,
    /// Samples on the nominal, filtered and augmented branches.
    pub branch_counts: [usize; 3],
}

pub fn trajectory_metrics(traj: &Trajectory) -> Option<TrajectoryMetrics> {
    let last = traj.samples.last()?;
    let mut branch_counts = [0usize; 3];
    for s in &traj.samples {
        branch_counts[s.branch.code() as usize] += 1;
    }
    let min_c = traj
        .samples
        .iter()
        .filter_map(|s| s.c)
        .reduce(f64::min);
    Some(TrajectoryMetrics {
        samples: traj.samples.len(),
        min_h: traj.samples.iter().map(|s| s.h).fold(f64::INFINITY, f64::min),
        min_c,
        max_lyapunov_increase: traj
            .samples
            .windows(2)
            .map(|w| w[1].lyapunov - w[0].lyapunov)
            .fold(f64::NEG_INFINITY, f64::max),
        terminal_norm: last.state.norm(),
        max_supply_residual: traj
            .samples
            .iter()
            .map(|s| s.supply_residual)
            .fold(f64::NEG_INFINITY, f64::max),
        branch_counts,
    })
}

/// CSV header: `t, q1..qn, v1..vn, u1..un, h, V, z, c, cdot, branch, supply_residual`.
pub fn csv_header(dof: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for prefix in ["q", "v", "u"] {
        cols.extend((1..=dof).map(|i| format!("{prefix}{i}")));
    }
    cols.extend(
        ["h", "V", "z", "c", "cdot", "branch", "supply_residual"]
            .iter()
            .map(|s| s.to_string()),
    );
    cols
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the trajectory as CSV. Constraint columns are empty for
/// relative-degree-one barriers.
pub fn write_csv<W: Write>(traj: &Trajectory, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(csv_header(traj.dof))?;
    for s in &traj.samples {
        let (q, v) = split_state(&s.state, traj.dof);
        let mut row = vec![s.t.to_string()];
        row.extend(q.iter().chain(v.iter()).chain(s.control.iter()).map(|x| x.to_string()));
        row.extend([
            s.h.to_string(),
            s.lyapunov.to_string(),
            s.z.to_string(),
            opt(s.c),
            opt(s.c_dot),
            s.branch.code().to_string(),
            s.supply_residual.to_string(),
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

//! JSON scenario files: model, barrier, nominal law, certification grids and
//! simulation settings in one document. Field names carry their units.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::barrier::{BarrierSpec, ClassKappa, EllipsoidConstraint, SmoothedConstraint};
use crate::controller::{CompatController, NominalLaw, WeightChoice};
use crate::dynamics::{two_link_arm, TwoLinkArm, TwoLinkArmParams, CORIOLIS_SAFETY_FACTOR};
use crate::error::{check_len, Error, Result};
use crate::grid::{GridAxis, GridSpec};
use crate::sim::{DisturbanceSpec, Integrator, SimConfig};

/// Velocity-limit scenario: computed torque with `|v|^2 <= 0.02`.
pub const VELOCITY_LIMIT_SCENARIO: &str = include_str!("../scenarios/velocity_limit.json");
/// Ellipsoidal workspace scenario: PD plus gravity with the augmented filter.
pub const ELLIPSOID_SCENARIO: &str = include_str!("../scenarios/ellipsoid_workspace.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    TwoLinkArm {
        link_lengths_m: [f64; 2],
        masses_kg: [f64; 2],
        gravity_m_per_s2: f64,
    },
}

impl ModelConfig {
    pub fn params(&self) -> TwoLinkArmParams {
        match *self {
            ModelConfig::TwoLinkArm {
                link_lengths_m,
                masses_kg,
                gravity_m_per_s2,
            } => TwoLinkArmParams {
                l1: link_lengths_m[0],
                l2: link_lengths_m[1],
                m1: masses_kg[0],
                m2: masses_kg[1],
                g0: gravity_m_per_s2,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BarrierConfig {
    /// `h = b - (q' P_q q + v' P_v v) / 2`
    RelativeDegreeOne {
        b: f64,
        p_q: Vec<Vec<f64>>,
        p_v: Vec<Vec<f64>>,
    },
    /// `h = grad c' v + phi(c)` with `c = chi_delta(a - (q - q_r)' P (q - q_r))`.
    /// A smoothing width of 0 disables smoothing.
    HighOrder {
        a_rad2: f64,
        center_rad: Vec<f64>,
        shape: Vec<Vec<f64>>,
        smoothing_delta_rad2: f64,
        phi_gain: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NominalKind {
    PdGravity,
    ComputedTorque,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NominalConfig {
    pub kind: NominalKind,
    pub kp: Vec<Vec<f64>>,
    pub kd: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightConfig {
    Identity,
    GramInput,
    InverseMass,
    InverseMassSquared,
}

impl From<WeightConfig> for WeightChoice {
    fn from(w: WeightConfig) -> Self {
        match w {
            WeightConfig::Identity => WeightChoice::Identity,
            WeightConfig::GramInput => WeightChoice::GramInput,
            WeightConfig::InverseMass => WeightChoice::InverseMass,
            WeightConfig::InverseMassSquared => WeightChoice::InverseMassSquared,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// One axis per joint [rad].
    pub configuration_rad: Vec<GridAxis>,
    /// One axis per joint [rad/s].
    pub velocity_rad_per_s: Vec<GridAxis>,
}

impl GridConfig {
    pub fn defaults(dof: usize) -> Self {
        Self {
            configuration_rad: GridSpec::default_configuration(dof).axes,
            velocity_rad_per_s: GridSpec::default_velocity(dof).axes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    pub dt_s: f64,
    pub horizon_s: f64,
    pub integrator: String,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            dt_s: 1e-3,
            horizon_s: 30.0,
            integrator: "rk4".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceConfig {
    pub amplitudes_nm: Vec<f64>,
    pub frequencies_rad_per_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelConfig,
    pub barrier: BarrierConfig,
    pub alpha_gain: f64,
    pub nominal: NominalConfig,
    pub weight: WeightConfig,
    pub augmented: bool,
    /// Augmentation gain. When absent it is tuned from the configuration
    /// grid, which requires the psi condition to hold.
    #[serde(default)]
    pub rho: Option<f64>,
    /// Lyapunov level to certify.
    pub nu: f64,
    pub grids: GridConfig,
    #[serde(default = "default_safety_factor")]
    pub coriolis_safety_factor: f64,
    #[serde(default)]
    pub sim: SimSettings,
    #[serde(default)]
    pub disturbance: Option<DisturbanceConfig>,
    /// Initial states `(q, v)` for `simulate` when none are given on the
    /// command line.
    #[serde(default)]
    pub initial_states: Vec<Vec<f64>>,
    /// Grid of initial states for `sweep`, one axis per state coordinate.
    #[serde(default)]
    pub sweep: Option<Vec<GridAxis>>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_safety_factor() -> f64 {
    CORIOLIS_SAFETY_FACTOR
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A scenario with every derived object constructed and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub model: TwoLinkArm,
    pub nominal: NominalLaw,
    pub barrier: BarrierSpec,
    pub weight: WeightChoice,
    pub augmented: bool,
    pub rho: Option<f64>,
    pub nu: f64,
    pub q_grid: GridSpec,
    pub state_grid: GridSpec,
    pub coriolis_safety_factor: f64,
    pub sim: SimConfig,
    pub initial_states: Vec<DVector<f64>>,
    pub sweep: Option<GridSpec>,
    pub output_dir: PathBuf,
}

fn matrix(name: &'static str, rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    check_len(name, rows.len(), n)?;
    for row in rows {
        check_len(name, row.len(), n)?;
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn velocity_limit() -> Self {
        Self::from_json(VELOCITY_LIMIT_SCENARIO).expect("bundled scenario parses")
    }

    pub fn ellipsoid_workspace() -> Self {
        Self::from_json(ELLIPSOID_SCENARIO).expect("bundled scenario parses")
    }

    /// Builds and cross-checks every derived object.
    pub fn build(&self) -> Result<Scenario> {
        let model = two_link_arm(self.model.params())?;
        let n = 2;
        let nominal = {
            let kp = matrix("kp", &self.nominal.kp, n)?;
            let kd = matrix("kd", &self.nominal.kd, n)?;
            match self.nominal.kind {
                NominalKind::PdGravity => NominalLaw::PdGravity { kp, kd },
                NominalKind::ComputedTorque => NominalLaw::ComputedTorque { kp, kd },
            }
        };
        nominal.validate(n)?;
        let alpha = ClassKappa::linear(self.alpha_gain);
        let barrier = match &self.barrier {
            BarrierConfig::RelativeDegreeOne { b, p_q, p_v } => BarrierSpec::relative_degree_one(
                *b,
                matrix("p_q", p_q, n)?,
                matrix("p_v", p_v, n)?,
                alpha,
            )?,
            BarrierConfig::HighOrder {
                a_rad2,
                center_rad,
                shape,
                smoothing_delta_rad2,
                phi_gain,
            } => {
                check_len("center_rad", center_rad.len(), n)?;
                let ellipsoid = EllipsoidConstraint::new(
                    *a_rad2,
                    DVector::from_column_slice(center_rad),
                    matrix("shape", shape, n)?,
                )?;
                BarrierSpec::high_order(
                    SmoothedConstraint::new(ellipsoid, *smoothing_delta_rad2)?,
                    ClassKappa::linear(*phi_gain),
                    alpha,
                )?
            }
        };
        barrier.validate(n)?;
        let weight = WeightChoice::from(self.weight);
        if self.augmented != (weight == WeightChoice::InverseMass && barrier.is_high_order()) {
            return Err(Error::Config(
                "the augmented controller is used exactly with a high-order barrier and \
                 weight inverse_mass"
                    .into(),
            ));
        }
        if let Some(rho) = self.rho {
            if !(rho.is_finite() && rho > 0.0) {
                return Err(Error::Config(format!("rho must be positive, got {rho}")));
            }
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::Config(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.coriolis_safety_factor.is_finite() && self.coriolis_safety_factor >= 1.0) {
            return Err(Error::Config("coriolis_safety_factor must be >= 1".into()));
        }
        check_len("configuration grid axes", self.grids.configuration_rad.len(), n)?;
        check_len("velocity grid axes", self.grids.velocity_rad_per_s.len(), n)?;
        let q_grid = GridSpec::new(self.grids.configuration_rad.clone());
        let v_grid = GridSpec::new(self.grids.velocity_rad_per_s.clone());
        q_grid.validate()?;
        v_grid.validate()?;
        let state_grid = GridSpec::product(&q_grid, &v_grid);

        if self.sim.integrator.to_ascii_lowercase() != "rk4" {
            return Err(Error::Config(format!(
                "unknown integrator {:?}; only \"rk4\" is available",
                self.sim.integrator
            )));
        }
        let disturbance = self.disturbance.as_ref().map(|d| DisturbanceSpec {
            amplitudes: d.amplitudes_nm.clone(),
            frequencies: d.frequencies_rad_per_s.clone(),
        });
        let sim = SimConfig {
            dt: self.sim.dt_s,
            horizon: self.sim.horizon_s,
            integrator: Integrator::Rk4,
            disturbance,
        };
        sim.validate(n)?;
        let initial_states = self
            .initial_states
            .iter()
            .map(|x| {
                check_len("initial state", x.len(), 2 * n)?;
                Ok(DVector::from_column_slice(x))
            })
            .collect::<Result<Vec<_>>>()?;
        let sweep = match &self.sweep {
            Some(axes) => {
                check_len("sweep axes", axes.len(), 2 * n)?;
                let g = GridSpec::new(axes.clone());
                g.validate()?;
                Some(g)
            }
            None => None,
        };
        Ok(Scenario {
            name: self.name.clone(),
            model,
            nominal,
            barrier,
            weight,
            augmented: self.augmented,
            rho: self.rho,
            nu: self.nu,
            q_grid,
            state_grid,
            coriolis_safety_factor: self.coriolis_safety_factor,
            sim,
            initial_states,
            sweep,
            output_dir: self.output_dir.clone(),
        })
    }
}

impl Scenario {
    /// Controller with the given augmentation gain (ignored when the filter
    /// is not augmented).
    pub fn controller_with_rho(&self, rho: f64) -> Result<CompatController> {
        CompatController::new(
            self.nominal.clone(),
            self.barrier.clone(),
            self.weight,
            if self.augmented { rho } else { 1.0 },
            self.augmented,
        )
    }

    /// Controller using the configured gain, or a tuned one when none is set.
    pub fn controller(&self) -> Result<CompatController> {
        match (self.augmented, self.rho) {
            (false, _) => self.controller_with_rho(1.0),
            (true, Some(rho)) => self.controller_with_rho(rho),
            (true, None) => self.controller_with_rho(self.tune_rho()?.rho),
        }
    }

    pub fn coriolis_bound(&self) -> Result<f64> {
        crate::dynamics::coriolis_bound(&self.model, &self.q_grid, self.coriolis_safety_factor)
    }

    pub fn tune_rho(&self) -> Result<crate::certify::RhoTuning> {
        let kc = self.coriolis_bound()?;
        crate::certify::tune_rho(
            &self.barrier,
            &self.model,
            &self.nominal,
            self.nu,
            &self.q_grid,
            kc,
        )
    }
}

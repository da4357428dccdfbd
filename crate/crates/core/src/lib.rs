//! Control barrier function safety filters whose feasibility is certified
//! against a nominal stabilizing controller.
//!
//! The crate provides control-affine manipulator dynamics, barrier
//! functions with their Lie derivatives, a closed-form quadratic-program
//! filter with an optional gradient augmentation, grid-based offline
//! certification, and a fixed-step simulator.

pub mod barrier;
pub mod certify;
pub mod cli;
pub mod controller;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod scenario;
pub mod sim;

pub use barrier::{BarrierKind, BarrierSpec, ClassKappa, EllipsoidConstraint, SmoothedConstraint};
pub use certify::{CertReport, CompatProblem, MechanicalLoop};
pub use controller::{BranchLabel, CompatController, NominalLaw, WeightChoice};
pub use dynamics::{two_link_arm, MechanicalModel, TwoLinkArmParams};
pub use error::{Error, Result};
pub use grid::{GridAxis, GridSpec};
pub use scenario::{Scenario, ScenarioConfig};
pub use sim::{integrate, SimConfig, Trajectory};

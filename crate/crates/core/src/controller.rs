//! Nominal stabilizing laws and the closed-form barrier safety filter.
//!
//! The filter returns the minimizer of `|u - k(x)|_G^2 / 2` subject to
//! `L_f h + L_g h u >= -alpha(h)`. With `z = L_f h + L_g h k + alpha(h)`,
//! the minimizer is `k` when `z >= 0` and
//! `k - z G^-1 L_g h' / |L_g h'|^2_{G^-1}` otherwise, so no optimizer runs
//! at control time.

use nalgebra::{DMatrix, DVector};

use crate::barrier::{BarrierKind, BarrierSpec, LieDerivatives};
use crate::dynamics::{split_state, to_affine, AffineDynamics, MechanicalModel};
use crate::error::{check_len, Error, Result};
use crate::linalg::{quad_form, require_spd, weighted_norm_sq};

/// Below this `|L_g h|` a filtered state is treated as degenerate.
pub const DEGENERATE_LG_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum NominalLaw {
    /// `k = tau_g(q) - K_p q - K_d v`, paired with
    /// `V = v' M v / 2 + q' K_p q / 2`.
    PdGravity { kp: DMatrix<f64>, kd: DMatrix<f64> },
    /// `k = C v + tau_g + M (-K_p q - K_d v)`, paired with
    /// `V = (q' K_p q + v' v) / 2`.
    ComputedTorque { kp: DMatrix<f64>, kd: DMatrix<f64> },
}

impl NominalLaw {
    pub fn kp(&self) -> &DMatrix<f64> {
        match self {
            NominalLaw::PdGravity { kp, .. } | NominalLaw::ComputedTorque { kp, .. } => kp,
        }
    }

    pub fn kd(&self) -> &DMatrix<f64> {
        match self {
            NominalLaw::PdGravity { kd, .. } | NominalLaw::ComputedTorque { kd, .. } => kd,
        }
    }

    pub fn validate(&self, dof: usize) -> Result<()> {
        check_len("K_p", self.kp().nrows(), dof)?;
        check_len("K_d", self.kd().nrows(), dof)?;
        require_spd("K_p", self.kp())?;
        require_spd("K_d", self.kd())
    }

    pub fn control(&self, model: &dyn MechanicalModel, x: &DVector<f64>) -> DVector<f64> {
        let (q, v) = split_state(x, model.dof());
        match self {
            NominalLaw::PdGravity { kp, kd } => model.gravity_torque(&q) - kp * &q - kd * &v,
            NominalLaw::ComputedTorque { kp, kd } => {
                model.coriolis(&q, &v) * &v + model.gravity_torque(&q)
                    + model.mass_matrix(&q) * (-(kp * &q) - kd * &v)
            }
        }
    }

    /// Potential `q' K_p q / 2`.
    pub fn potential(&self, q: &DVector<f64>) -> f64 {
        0.5 * quad_form(self.kp(), q)
    }

    pub fn in_potential_level(&self, q: &DVector<f64>, nu: f64) -> bool {
        self.potential(q) <= nu
    }

    pub fn lyapunov(&self, model: &dyn MechanicalModel, x: &DVector<f64>) -> f64 {
        let (q, v) = split_state(x, model.dof());
        let kinetic = match self {
            NominalLaw::PdGravity { .. } => 0.5 * quad_form(&model.mass_matrix(&q), &v),
            NominalLaw::ComputedTorque { .. } => 0.5 * v.dot(&v),
        };
        kinetic + self.potential(&q)
    }

    pub fn lyapunov_gradient(&self, model: &dyn MechanicalModel, x: &DVector<f64>) -> DVector<f64> {
        let n = model.dof();
        let (q, v) = split_state(x, n);
        let kq = self.kp() * &q;
        match self {
            NominalLaw::PdGravity { .. } => {
                let gq = DVector::from_fn(n, |k, _| {
                    0.5 * quad_form(&model.mass_matrix_partial(&q, k), &v) + kq[k]
                });
                crate::dynamics::join_state(&gq, &(model.mass_matrix(&q) * &v))
            }
            NominalLaw::ComputedTorque { .. } => crate::dynamics::join_state(&kq, &v),
        }
    }
}

/// Weighting matrix `G(x)` of the filter cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightChoice {
    Identity,
    /// `G = g' g`; for mechanical models this is `M^-T M^-1`.
    GramInput,
    /// `G = M^-1`.
    InverseMass,
    /// `G = M^-T M^-1`.
    InverseMassSquared,
}

impl WeightChoice {
    pub fn matrix(&self, model: &dyn MechanicalModel, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = model.dof();
        Ok(match self {
            WeightChoice::Identity => DMatrix::identity(n, n),
            WeightChoice::InverseMass => model.inverse_mass(q)?,
            WeightChoice::GramInput | WeightChoice::InverseMassSquared => {
                let minv = model.inverse_mass(q)?;
                minv.transpose() * minv
            }
        })
    }

    /// `G^-1`, assembled without a numerical inverse.
    pub fn inverse(&self, model: &dyn MechanicalModel, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = model.dof();
        Ok(match self {
            WeightChoice::Identity => DMatrix::identity(n, n),
            WeightChoice::InverseMass => model.mass_matrix(q),
            WeightChoice::GramInput | WeightChoice::InverseMassSquared => {
                let m = model.mass_matrix(q);
                &m * m.transpose()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BranchLabel {
    Nominal,
    Filtered,
    FilteredAugmented,
}

impl BranchLabel {
    pub fn code(self) -> u8 {
        match self {
            BranchLabel::Nominal => 0,
            BranchLabel::Filtered => 1,
            BranchLabel::FilteredAugmented => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub control: DVector<f64>,
    pub branch: BranchLabel,
    pub z: f64,
}

/// Closed-form minimizer of `|u - k|_G^2 / 2` s.t. `lf + lg u + alpha_h >= 0`.
pub fn closed_form_filter(
    nominal: &DVector<f64>,
    lie: &LieDerivatives,
    alpha_h: f64,
    weight_inverse: &DMatrix<f64>,
    x: &DVector<f64>,
) -> Result<FilterOutput> {
    let z = lie.lf + lie.lg.dot(nominal) + alpha_h;
    if z >= 0.0 {
        return Ok(FilterOutput {
            control: nominal.clone(),
            branch: BranchLabel::Nominal,
            z,
        });
    }
    let lg_norm = lie.lg.norm();
    if lg_norm < DEGENERATE_LG_NORM {
        return Err(Error::DegenerateFilter {
            state: x.iter().copied().collect(),
            z,
            lg_norm,
        });
    }
    let direction = weight_inverse * &lie.lg;
    let scale = z / lie.lg.dot(&direction);
    Ok(FilterOutput {
        control: nominal - direction * scale,
        branch: BranchLabel::Filtered,
        z,
    })
}

/// Nominal law, barrier and filter weighting. When `augmented` is set the
/// filtered branch adds `rho^2 z c' v / |grad c|^2_{M^-1}` whenever the
/// constraint rate `c'` is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatController {
    pub nominal: NominalLaw,
    pub barrier: BarrierSpec,
    pub weight: WeightChoice,
    pub rho: f64,
    pub augmented: bool,
}

impl CompatController {
    pub fn new(
        nominal: NominalLaw,
        barrier: BarrierSpec,
        weight: WeightChoice,
        rho: f64,
        augmented: bool,
    ) -> Result<Self> {
        let ctrl = Self {
            nominal,
            barrier,
            weight,
            rho,
            augmented,
        };
        if ctrl.augmented {
            if !ctrl.barrier.is_high_order() {
                return Err(Error::InvalidParameter(
                    "the augmented controller needs a high-order barrier".into(),
                ));
            }
            if !(ctrl.rho.is_finite() && ctrl.rho > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "rho must be positive, got {}",
                    ctrl.rho
                )));
            }
            if ctrl.weight != WeightChoice::InverseMass {
                return Err(Error::InvalidParameter(
                    "the augmented controller uses G = M^-1".into(),
                ));
            }
        }
        Ok(ctrl)
    }

    pub fn validate(&self, model: &dyn MechanicalModel) -> Result<()> {
        self.nominal.validate(model.dof())?;
        self.barrier.validate(model.dof())
    }

    pub fn nominal_control(&self, model: &dyn MechanicalModel, x: &DVector<f64>) -> DVector<f64> {
        self.nominal.control(model, x)
    }

    pub fn margin_z(&self, model: &dyn MechanicalModel, x: &DVector<f64>) -> Result<f64> {
        self.barrier
            .margin_z(model, &|x| Ok(self.nominal.control(model, x)), x)
    }

    /// Closed-form filter with this controller's weighting.
    pub fn qp_filter(&self, model: &dyn MechanicalModel, x: &DVector<f64>) -> Result<FilterOutput> {
        let n = model.dof();
        check_len("state", x.len(), 2 * n)?;
        let q = x.rows(0, n).into_owned();
        let lie = self.barrier.lie_derivatives(model, x)?;
        let k = self.nominal.control(model, x);
        let alpha_h = self.barrier.alpha.eval(self.barrier.eval_h(x));
        closed_form_filter(&k, &lie, alpha_h, &self.weight.inverse(model, &q)?, x)
    }

    pub fn augmented_control(
        &self,
        model: &dyn MechanicalModel,
        x: &DVector<f64>,
    ) -> Result<FilterOutput> {
        let BarrierKind::HighOrder { constraint, .. } = &self.barrier.kind else {
            return Err(Error::InvalidParameter(
                "the augmented controller needs a high-order barrier".into(),
            ));
        };
        let n = model.dof();
        check_len("state", x.len(), 2 * n)?;
        let (q, v) = split_state(x, n);
        let c = constraint.eval(&q);
        let minv = model.inverse_mass(&q)?;
        let lie = self.barrier.lie_derivatives(model, x)?;
        let k = self.nominal.control(model, x);
        let alpha_h = self.barrier.alpha.eval(self.barrier.eval_h(x));
        let mut out = closed_form_filter(&k, &lie, alpha_h, &model.mass_matrix(&q), x)?;
        let c_dot = c.gradient.dot(&v);
        if out.branch == BranchLabel::Filtered && c_dot > 0.0 {
            let grad_norm_sq = weighted_norm_sq(&c.gradient, &minv);
            out.control += &v * (self.rho * self.rho * out.z * c_dot / grad_norm_sq);
            out.branch = BranchLabel::FilteredAugmented;
        }
        Ok(out)
    }

    /// The control law this controller applies.
    pub fn control(&self, model: &dyn MechanicalModel, x: &DVector<f64>) -> Result<FilterOutput> {
        if self.augmented {
            self.augmented_control(model, x)
        } else {
            self.qp_filter(model, x)
        }
    }

    pub fn lyapunov(&self, model: &dyn MechanicalModel, x: &DVector<f64>) -> f64 {
        self.nominal.lyapunov(model, x)
    }

    /// `V' = grad V' (f(x) + g(x) u)`.
    pub fn lyapunov_rate(
        &self,
        model: &dyn MechanicalModel,
        x: &DVector<f64>,
        u: &DVector<f64>,
    ) -> Result<f64> {
        let sys = to_affine(model);
        let xdot = sys.drift(x)? + sys.input_matrix(x)? * u;
        Ok(self.nominal.lyapunov_gradient(model, x).dot(&xdot))
    }

    /// `V' - v' mu` with `mu = -K_d v`; nonpositive for a passive closed loop.
    pub fn supply_rate_residual(
        &self,
        model: &dyn MechanicalModel,
        x: &DVector<f64>,
        u: &DVector<f64>,
    ) -> Result<f64> {
        let (_, v) = split_state(x, model.dof());
        Ok(self.lyapunov_rate(model, x, u)? + quad_form(self.nominal.kd(), &v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::{ClassKappa, EllipsoidConstraint, SmoothedConstraint};
    use crate::dynamics::{join_state, two_link_arm, TwoLinkArmParams};
    use approx::assert_relative_eq;

    fn v2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    fn arm() -> crate::dynamics::TwoLinkArm {
        two_link_arm(TwoLinkArmParams::default()).unwrap()
    }

    fn pd() -> NominalLaw {
        NominalLaw::PdGravity {
            kp: DMatrix::identity(2, 2),
            kd: DMatrix::identity(2, 2) * 0.5,
        }
    }

    fn ellipsoid_controller(rho: f64) -> CompatController {
        let c = SmoothedConstraint::new(
            EllipsoidConstraint::new(0.8, v2(0.9, 0.0), DMatrix::from_diagonal(&v2(1.0, 2.0)))
                .unwrap(),
            0.7,
        )
        .unwrap();
        let b = BarrierSpec::high_order(c, ClassKappa::identity(), ClassKappa::identity()).unwrap();
        CompatController::new(pd(), b, WeightChoice::InverseMass, rho, true).unwrap()
    }

    #[test]
    fn nominal_laws_hold_equilibrium_at_origin() {
        let arm = arm();
        let x = DVector::zeros(4);
        let ct = NominalLaw::ComputedTorque {
            kp: DMatrix::identity(2, 2),
            kd: DMatrix::identity(2, 2) * 0.5,
        };
        for law in [pd(), ct] {
            let k = law.control(&arm, &x);
            assert_eq!(k, arm.gravity_torque(&DVector::zeros(2)));
            let sys = to_affine(&arm);
            let xdot = sys.drift(&x).unwrap() + sys.input_matrix(&x).unwrap() * k;
            assert!(xdot.amax() < 1e-12);
        }
        let k = pd().control(&arm, &x);
        assert_relative_eq!(k[0], 29.43, epsilon = 1e-12);
        assert_relative_eq!(k[1], 9.81, epsilon = 1e-12);
    }

    #[test]
    fn lyapunov_reference_values() {
        let arm = arm();
        assert_eq!(pd().lyapunov(&arm, &DVector::zeros(4)), 0.0);
        let x = join_state(&v2(0.0, 0.0), &v2(1.0, 0.0));
        assert_relative_eq!(pd().lyapunov(&arm, &x), 2.5);
        let ct = NominalLaw::ComputedTorque {
            kp: DMatrix::identity(2, 2),
            kd: DMatrix::identity(2, 2),
        };
        let x = join_state(&v2(1.0, 0.0), &v2(0.0, 0.0));
        assert_relative_eq!(ct.lyapunov(&arm, &x), 0.5);
        assert!(pd().in_potential_level(&v2(1.0, 0.0), 0.5));
        assert!(!pd().in_potential_level(&v2(1.0, 0.1), 0.5));
    }

    #[test]
    fn lyapunov_gradient_matches_central_difference() {
        let arm = arm();
        let x = DVector::from_vec(vec![0.3, -0.8, 0.5, 1.1]);
        let g = pd().lyapunov_gradient(&arm, &x);
        for i in 0..4 {
            let eps = 1e-6;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += eps;
            xm[i] -= eps;
            let fd = (pd().lyapunov(&arm, &xp) - pd().lyapunov(&arm, &xm)) / (2.0 * eps);
            assert_relative_eq!(fd, g[i], epsilon = 1e-7);
        }
    }

    #[test]
    fn nominal_branch_returns_nominal_exactly() {
        let arm = arm();
        let ctrl = ellipsoid_controller(5.0);
        let x = join_state(&v2(0.9, 0.0), &v2(0.1, 0.1));
        let out = ctrl.qp_filter(&arm, &x).unwrap();
        assert!(out.z >= 0.0);
        assert_eq!(out.branch, BranchLabel::Nominal);
        assert_eq!(out.control, ctrl.nominal_control(&arm, &x));
    }

    #[test]
    fn zero_margin_filter_equals_nominal() {
        let k = v2(1.0, -2.0);
        let lie = LieDerivatives {
            lf: 0.5,
            lg: v2(1.0, 1.0),
        };
        // z = 0.5 - 1 + 0.5 = 0
        let out = closed_form_filter(&k, &lie, 0.5, &DMatrix::identity(2, 2), &DVector::zeros(4)).unwrap();
        assert_eq!(out.control, k);
        // z slightly negative: continuous
        let out = closed_form_filter(&k, &lie, 0.5 - 1e-9, &DMatrix::identity(2, 2), &DVector::zeros(4))
            .unwrap();
        assert_eq!(out.branch, BranchLabel::Filtered);
        assert!((out.control - k).amax() < 1e-8);
    }

    #[test]
    fn degenerate_filter_fails_loudly() {
        let lie = LieDerivatives {
            lf: -1.0,
            lg: v2(0.0, 0.0),
        };
        let err = closed_form_filter(&v2(0.0, 0.0), &lie, 0.1, &DMatrix::identity(2, 2), &DVector::zeros(4));
        assert!(matches!(err, Err(Error::DegenerateFilter { .. })));
    }

    #[test]
    fn augmented_at_rest_is_nominal_when_margin_positive() {
        let arm = arm();
        let ctrl = ellipsoid_controller(5.0);
        let x = join_state(&v2(0.6, 0.1), &v2(0.0, 0.0));
        let out = ctrl.augmented_control(&arm, &x).unwrap();
        assert!(out.z > 0.0);
        assert_eq!(out.branch, BranchLabel::Nominal);
        assert_eq!(out.control, ctrl.nominal_control(&arm, &x));
    }

    #[test]
    fn augmented_requires_high_order_and_inverse_mass() {
        let b = BarrierSpec::relative_degree_one(
            0.01,
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            ClassKappa::identity(),
        )
        .unwrap();
        assert!(CompatController::new(pd(), b, WeightChoice::InverseMass, 1.0, true).is_err());
        let c = ellipsoid_controller(1.0);
        assert!(CompatController::new(pd(), c.barrier.clone(), WeightChoice::Identity, 1.0, true).is_err());
        assert!(CompatController::new(pd(), c.barrier, WeightChoice::InverseMass, 0.0, true).is_err());
    }

    #[test]
    fn supply_residual_vanishes_on_nominal_branch_and_at_rest() {
        let arm = arm();
        let ctrl = ellipsoid_controller(5.0);
        let x = join_state(&v2(0.9, 0.1), &v2(0.3, -0.7));
        let k = ctrl.nominal_control(&arm, &x);
        assert!(ctrl.supply_rate_residual(&arm, &x, &k).unwrap().abs() < 1e-12);
        let x = join_state(&v2(0.4, 0.2), &v2(0.0, 0.0));
        let u = ctrl.control(&arm, &x).unwrap().control;
        assert!(ctrl.supply_rate_residual(&arm, &x, &u).unwrap().abs() < 1e-12);
    }
}

//! Zeroing control barrier functions for mechanical systems.
//!
//! Two families are supported, both for states `x = (q, v)`:
//!
//! * **Relative degree one**, `h = b - (q' P_q q + v' P_v v) / 2`. Along the
//!   dynamics `M v' = -C v - tau_g + u` this gives
//!
//!   ```text
//!   h'    = -q' P_q v - v' P_v v'
//!   L_f h = -q' P_q v - v' P_v M^-1 (-C v - tau_g)
//!   L_g h = -v' P_v M^-1
//!   ```
//!
//! * **High order**, built from a twice-differentiable configuration
//!   constraint `c(q) >= 0` as `h = grad c(q)' v + phi(c(q))`:
//!
//!   ```text
//!   L_f h = grad c' M^-1 (-C v - tau_g) + phi'(c) grad c' v + v' hess c v
//!   L_g h = grad c' M^-1
//!   ```
//!
//! The configuration constraint is an ellipsoid `a - (q - q_r)' P (q - q_r)`
//! passed through the cubic smoothing [`chi_delta`], which flattens the
//! constraint to 1 wherever its raw value exceeds `delta` and therefore
//! removes the critical point at the ellipsoid centre.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{split_state, MechanicalModel};
use crate::error::{check_len, Error, Result};
use crate::linalg::{quad_form, require_spd, require_symmetric};

/// Extended class-K function. Only linear gains are provided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassKappa {
    Linear { gain: f64 },
}

impl ClassKappa {
    pub fn linear(gain: f64) -> Self {
        ClassKappa::Linear { gain }
    }

    pub fn identity() -> Self {
        Self::linear(1.0)
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            ClassKappa::Linear { gain } => gain * s,
        }
    }

    pub fn derivative(&self, _s: f64) -> f64 {
        match self {
            ClassKappa::Linear { gain } => *gain,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ClassKappa::Linear { gain } if gain.is_finite() && *gain > 0.0 => Ok(()),
            ClassKappa::Linear { gain } => Err(Error::InvalidParameter(format!(
                "class-K gain must be positive, got {gain}"
            ))),
        }
    }
}

/// Value and first two derivatives of a scalar map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Cubic smoothing: `1` above `delta`, `(s/delta - 1)^3 + 1` below.
pub fn chi_delta(s: f64, delta: f64) -> Jet {
    let r = s / delta;
    if r > 1.0 {
        Jet {
            value: 1.0,
            d1: 0.0,
            d2: 0.0,
        }
    } else {
        let w = r - 1.0;
        Jet {
            value: w * w * w + 1.0,
            d1: 3.0 * w * w / delta,
            d2: 6.0 * w / (delta * delta),
        }
    }
}

/// Constraint value with its gradient and Hessian in `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintEval {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// `a - (q - q_r)' P (q - q_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidConstraint {
    pub a: f64,
    pub center: DVector<f64>,
    pub shape: DMatrix<f64>,
}

impl EllipsoidConstraint {
    pub fn new(a: f64, center: DVector<f64>, shape: DMatrix<f64>) -> Result<Self> {
        let e = Self { a, center, shape };
        e.validate()?;
        Ok(e)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn validate(&self) -> Result<()> {
        check_len("ellipsoid shape", self.shape.nrows(), self.center.len())?;
        require_symmetric("ellipsoid shape", &self.shape)?;
        if !self.a.is_finite() || self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("ellipsoid parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn eval(&self, q: &DVector<f64>) -> ConstraintEval {
        let d = q - &self.center;
        let pd = &self.shape * &d;
        ConstraintEval {
            value: self.a - d.dot(&pd),
            gradient: -2.0 * pd,
            hessian: -2.0 * &self.shape,
        }
    }
}

/// Ellipsoid constraint composed with [`chi_delta`]. `delta == 0` disables
/// smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedConstraint {
    pub base: EllipsoidConstraint,
    pub delta: f64,
}

impl SmoothedConstraint {
    pub fn new(base: EllipsoidConstraint, delta: f64) -> Result<Self> {
        let c = Self { base, delta };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "smoothing delta must be >= 0, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    pub fn is_smoothed(&self) -> bool {
        self.delta > 0.0
    }

    pub fn eval(&self, q: &DVector<f64>) -> ConstraintEval {
        let raw = self.base.eval(q);
        if !self.is_smoothed() {
            return raw;
        }
        let chi = chi_delta(raw.value, self.delta);
        let hessian = if chi.d2 == 0.0 && chi.d1 == 0.0 {
            DMatrix::zeros(q.len(), q.len())
        } else {
            &raw.gradient * raw.gradient.transpose() * chi.d2 + &raw.hessian * chi.d1
        };
        ConstraintEval {
            value: chi.value,
            gradient: &raw.gradient * chi.d1,
            hessian,
        }
    }

    pub fn value(&self, q: &DVector<f64>) -> f64 {
        let raw = self.base.eval(q).value;
        if self.is_smoothed() {
            chi_delta(raw, self.delta).value
        } else {
            raw
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BarrierKind {
    RelativeDegreeOne {
        b: f64,
        p_q: DMatrix<f64>,
        p_v: DMatrix<f64>,
    },
    HighOrder {
        constraint: SmoothedConstraint,
        phi: ClassKappa,
    },
}

/// A barrier `h` together with the class-K function `alpha` of its
/// zeroing condition `h' >= -alpha(h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSpec {
    pub kind: BarrierKind,
    pub alpha: ClassKappa,
}

/// `L_f h` and the row vector `L_g h` (stored as a column).
#[derive(Debug, Clone, PartialEq)]
pub struct LieDerivatives {
    pub lf: f64,
    pub lg: DVector<f64>,
}

impl BarrierSpec {
    pub fn relative_degree_one(
        b: f64,
        p_q: DMatrix<f64>,
        p_v: DMatrix<f64>,
        alpha: ClassKappa,
    ) -> Result<Self> {
        let spec = Self {
            kind: BarrierKind::RelativeDegreeOne { b, p_q, p_v },
            alpha,
        };
        spec.validate_self()?;
        Ok(spec)
    }

    pub fn high_order(constraint: SmoothedConstraint, phi: ClassKappa, alpha: ClassKappa) -> Result<Self> {
        let spec = Self {
            kind: BarrierKind::HighOrder { constraint, phi },
            alpha,
        };
        spec.validate_self()?;
        Ok(spec)
    }

    fn validate_self(&self) -> Result<()> {
        self.alpha.validate()?;
        match &self.kind {
            BarrierKind::RelativeDegreeOne { b, p_q, p_v } => {
                if !b.is_finite() {
                    return Err(Error::InvalidParameter("b must be finite".into()));
                }
                check_len("P_q", p_q.nrows(), p_v.nrows())?;
                require_symmetric("P_q", p_q)?;
                require_spd("P_v", p_v)
            }
            BarrierKind::HighOrder { constraint, phi } => {
                phi.validate()?;
                constraint.validate()
            }
        }
    }

    /// Checks the barrier against a model with `dof` degrees of freedom.
    pub fn validate(&self, dof: usize) -> Result<()> {
        self.validate_self()?;
        let n = match &self.kind {
            BarrierKind::RelativeDegreeOne { p_v, .. } => p_v.nrows(),
            BarrierKind::HighOrder { constraint, .. } => constraint.base.dim(),
        };
        check_len("barrier dimension", n, dof)
    }

    pub fn is_high_order(&self) -> bool {
        matches!(self.kind, BarrierKind::HighOrder { .. })
    }

    pub fn constraint(&self) -> Option<&SmoothedConstraint> {
        match &self.kind {
            BarrierKind::HighOrder { constraint, .. } => Some(constraint),
            _ => None,
        }
    }

    /// `c(q)` for high-order barriers.
    pub fn constraint_value(&self, q: &DVector<f64>) -> Option<f64> {
        self.constraint().map(|c| c.value(q))
    }

    /// `c'(q, v) = grad c(q)' v` for high-order barriers.
    pub fn constraint_rate(&self, x: &DVector<f64>) -> Option<f64> {
        let n = x.len() / 2;
        self.constraint().map(|c| {
            let (q, v) = split_state(x, n);
            c.eval(&q).gradient.dot(&v)
        })
    }

    pub fn eval_h(&self, x: &DVector<f64>) -> f64 {
        let n = x.len() / 2;
        let (q, v) = split_state(x, n);
        match &self.kind {
            BarrierKind::RelativeDegreeOne { b, p_q, p_v } => {
                b - 0.5 * (quad_form(p_q, &q) + quad_form(p_v, &v))
            }
            BarrierKind::HighOrder { constraint, phi } => {
                let c = constraint.eval(&q);
                c.gradient.dot(&v) + phi.eval(c.value)
            }
        }
    }

    /// Full-state gradient `(dh/dq, dh/dv)`.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = x.len() / 2;
        let (q, v) = split_state(x, n);
        let (gq, gv) = match &self.kind {
            BarrierKind::RelativeDegreeOne { p_q, p_v, .. } => (-(p_q * &q), -(p_v * &v)),
            BarrierKind::HighOrder { constraint, phi } => {
                let c = constraint.eval(&q);
                let gq = &c.hessian * &v + &c.gradient * phi.derivative(c.value);
                (gq, c.gradient)
            }
        };
        crate::dynamics::join_state(&gq, &gv)
    }

    /// `x` lies in the safe set: `h >= 0` and, for high-order barriers, `c >= 0`.
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        let n = x.len() / 2;
        self.eval_h(x) >= 0.0
            && self
                .constraint_value(&x.rows(0, n).into_owned())
                .is_none_or(|c| c >= 0.0)
    }

    /// Strict interior: `h > 0` and, for high-order barriers, `c > 0`.
    pub fn interior(&self, x: &DVector<f64>) -> bool {
        let n = x.len() / 2;
        self.eval_h(x) > 0.0
            && self
                .constraint_value(&x.rows(0, n).into_owned())
                .is_none_or(|c| c > 0.0)
    }

    pub fn lie_derivatives(
        &self,
        model: &dyn MechanicalModel,
        x: &DVector<f64>,
    ) -> Result<LieDerivatives> {
        let n = model.dof();
        check_len("state", x.len(), 2 * n)?;
        let (q, v) = split_state(x, n);
        let minv = model.inverse_mass(&q)?;
        let unforced = &minv * (-(model.coriolis(&q, &v) * &v) - model.gravity_torque(&q));
        Ok(match &self.kind {
            BarrierKind::RelativeDegreeOne { p_q, p_v, .. } => {
                let pv_v = p_v * &v;
                LieDerivatives {
                    lf: -(p_q * &q).dot(&v) - pv_v.dot(&unforced),
                    lg: -(&minv * pv_v),
                }
            }
            BarrierKind::HighOrder { constraint, phi } => {
                let c = constraint.eval(&q);
                LieDerivatives {
                    lf: c.gradient.dot(&unforced)
                        + phi.derivative(c.value) * c.gradient.dot(&v)
                        + quad_form(&c.hessian, &v),
                    lg: &minv * &c.gradient,
                }
            }
        })
    }

    /// `z = L_f h + L_g h k(x) + alpha(h)`.
    pub fn margin_z(
        &self,
        model: &dyn MechanicalModel,
        nominal: &dyn Fn(&DVector<f64>) -> Result<DVector<f64>>,
        x: &DVector<f64>,
    ) -> Result<f64> {
        let lie = self.lie_derivatives(model, x)?;
        let k = nominal(x)?;
        Ok(lie.lf + lie.lg.dot(&k) + self.alpha.eval(self.eval_h(x)))
    }
}

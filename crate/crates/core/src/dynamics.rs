//! Control-affine and mechanical system models.
//!
//! A mechanical model with `n` degrees of freedom has state `x = (q, v)` and
//! dynamics `q' = v`, `M(q) v' = -C(q, v) v - tau_g(q) + u`. Its control-affine
//! form has input matrix `g(x) = [0; M(q)^-1]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid::GridSpec;
use crate::linalg::spectral_norm;

/// Default safety factor applied by [`coriolis_bound`] to the sampled maximum.
pub const CORIOLIS_SAFETY_FACTOR: f64 = 1.05;

/// `x' = f(x) + g(x) u`.
pub trait AffineDynamics: Send + Sync {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn drift(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn input_matrix(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;
}

/// Rigid mechanical system described by its inertia, Coriolis and gravity terms.
pub trait MechanicalModel: Send + Sync {
    fn dof(&self) -> usize;

    fn mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64>;

    /// Partial derivative of the inertia matrix with respect to `q[k]`.
    fn mass_matrix_partial(&self, q: &DVector<f64>, k: usize) -> DMatrix<f64>;

    fn gravity_torque(&self, q: &DVector<f64>) -> DVector<f64>;

    /// Coriolis/centrifugal matrix from the Christoffel symbols of `M`,
    /// which makes `M' - 2C` skew-symmetric.
    fn coriolis(&self, q: &DVector<f64>, v: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dof();
        let partials: Vec<DMatrix<f64>> = (0..n).map(|k| self.mass_matrix_partial(q, k)).collect();
        DMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| {
                    0.5 * (partials[k][(i, j)] + partials[j][(i, k)] - partials[i][(j, k)]) * v[k]
                })
                .sum()
        })
    }

    /// Time derivative of `M(q)` along velocity `v`.
    fn mass_matrix_dot(&self, q: &DVector<f64>, v: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dof();
        (0..n).fold(DMatrix::zeros(n, n), |acc, k| {
            acc + self.mass_matrix_partial(q, k) * v[k]
        })
    }

    fn inverse_mass(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.mass_matrix(q)
            .cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| Error::SingularMass {
                q: q.iter().copied().collect(),
            })
    }
}

/// Splits a mechanical state into `(q, v)`.
pub fn split_state(x: &DVector<f64>, dof: usize) -> (DVector<f64>, DVector<f64>) {
    (x.rows(0, dof).into_owned(), x.rows(dof, dof).into_owned())
}

pub fn join_state(q: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut x = DVector::zeros(q.len() + v.len());
    x.rows_mut(0, q.len()).copy_from(q);
    x.rows_mut(q.len(), v.len()).copy_from(v);
    x
}

/// Accelerations `M^-1 (u - C v - tau_g)`.
pub fn forward_dynamics(
    model: &dyn MechanicalModel,
    q: &DVector<f64>,
    v: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    let rhs = u - model.coriolis(q, v) * v - model.gravity_torque(q);
    model
        .mass_matrix(q)
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::SingularMass {
            q: q.iter().copied().collect(),
        })
}

/// Control-affine view of a mechanical model.
pub struct MechanicalAffine<'a> {
    model: &'a dyn MechanicalModel,
}

pub fn to_affine(model: &dyn MechanicalModel) -> MechanicalAffine<'_> {
    MechanicalAffine { model }
}

impl MechanicalAffine<'_> {
    pub fn model(&self) -> &dyn MechanicalModel {
        self.model
    }
}

impl AffineDynamics for MechanicalAffine<'_> {
    fn state_dim(&self) -> usize {
        2 * self.model.dof()
    }

    fn input_dim(&self) -> usize {
        self.model.dof()
    }

    fn drift(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.model.dof();
        check_len("state", x.len(), 2 * n)?;
        let (q, v) = split_state(x, n);
        let accel = forward_dynamics(self.model, &q, &v, &DVector::zeros(n))?;
        Ok(join_state(&v, &accel))
    }

    fn input_matrix(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.model.dof();
        check_len("state", x.len(), 2 * n)?;
        let (q, _) = split_state(x, n);
        let minv = self.model.inverse_mass(&q)?;
        let mut g = DMatrix::zeros(2 * n, n);
        g.view_mut((n, 0), (n, n)).copy_from(&minv);
        Ok(g)
    }
}

/// Planar two-link arm parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLinkArmParams {
    pub l1: f64,
    pub l2: f64,
    pub m1: f64,
    pub m2: f64,
    pub g0: f64,
}

impl Default for TwoLinkArmParams {
    fn default() -> Self {
        Self {
            l1: 1.0,
            l2: 1.0,
            m1: 1.0,
            m2: 1.0,
            g0: 9.81,
        }
    }
}

impl TwoLinkArmParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.l1, self.l2, self.m1, self.m2, self.g0];
        if all.iter().all(|p| p.is_finite() && *p > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "two-link arm lengths, masses and gravity must be positive".into(),
            ))
        }
    }
}

/// Planar two-link arm with point masses at the distal end of each link.
///
/// `q1` is the shoulder angle from the horizontal, `q2` the elbow angle
/// relative to link 1, and gravity acts along `-y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLinkArm {
    params: TwoLinkArmParams,
}

pub fn two_link_arm(params: TwoLinkArmParams) -> Result<TwoLinkArm> {
    params.validate()?;
    Ok(TwoLinkArm { params })
}

impl TwoLinkArm {
    pub fn params(&self) -> &TwoLinkArmParams {
        &self.params
    }
}

impl MechanicalModel for TwoLinkArm {
    fn dof(&self) -> usize {
        2
    }

    fn mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let TwoLinkArmParams { l1, l2, m1, m2, .. } = self.params;
        let c2 = q[1].cos();
        let m11 = m1 * l1 * l1 + m2 * (l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * c2);
        let m12 = m2 * (l2 * l2 + l1 * l2 * c2);
        let m22 = m2 * l2 * l2;
        DMatrix::from_row_slice(2, 2, &[m11, m12, m12, m22])
    }

    fn mass_matrix_partial(&self, q: &DVector<f64>, k: usize) -> DMatrix<f64> {
        if k == 0 {
            return DMatrix::zeros(2, 2);
        }
        let TwoLinkArmParams { l1, l2, m2, .. } = self.params;
        let s = -m2 * l1 * l2 * q[1].sin();
        DMatrix::from_row_slice(2, 2, &[2.0 * s, s, s, 0.0])
    }

    fn gravity_torque(&self, q: &DVector<f64>) -> DVector<f64> {
        let TwoLinkArmParams {
            l1, l2, m1, m2, g0, ..
        } = self.params;
        let c1 = q[0].cos();
        let c12 = (q[0] + q[1]).cos();
        DVector::from_vec(vec![
            (m1 + m2) * g0 * l1 * c1 + m2 * g0 * l2 * c12,
            m2 * g0 * l2 * c12,
        ])
    }

    fn coriolis(&self, q: &DVector<f64>, v: &DVector<f64>) -> DMatrix<f64> {
        let TwoLinkArmParams { l1, l2, m2, .. } = self.params;
        let h = -m2 * l1 * l2 * q[1].sin();
        DMatrix::from_row_slice(2, 2, &[h * v[1], h * (v[0] + v[1]), -h * v[0], 0.0])
    }
}

/// Configuration-independent inertia and no gravity; `C = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantInertia {
    mass: DMatrix<f64>,
}

impl ConstantInertia {
    pub fn new(mass: DMatrix<f64>) -> Result<Self> {
        crate::linalg::require_spd("inertia", &mass)?;
        Ok(Self { mass })
    }
}

impl MechanicalModel for ConstantInertia {
    fn dof(&self) -> usize {
        self.mass.nrows()
    }

    fn mass_matrix(&self, _q: &DVector<f64>) -> DMatrix<f64> {
        self.mass.clone()
    }

    fn mass_matrix_partial(&self, _q: &DVector<f64>, _k: usize) -> DMatrix<f64> {
        DMatrix::zeros(self.dof(), self.dof())
    }

    fn gravity_torque(&self, _q: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.dof())
    }
}

/// Deterministic unit directions used to sample `max |C(q, v)|` over `|v| = 1`.
/// `C` is linear in `v`, so antipodal directions are redundant.
pub fn unit_directions(n: usize) -> Vec<DVector<f64>> {
    match n {
        0 => vec![],
        1 => vec![DVector::from_element(1, 1.0)],
        2 => (0..360)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / 360.0;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect(),
        _ => {
            let mut dirs = Vec::new();
            for i in 0..n {
                dirs.push(DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 }));
                for j in (i + 1)..n {
                    for sign in [1.0, -1.0] {
                        let mut d = DVector::zeros(n);
                        d[i] = std::f64::consts::FRAC_1_SQRT_2;
                        d[j] = sign * std::f64::consts::FRAC_1_SQRT_2;
                        dirs.push(d);
                    }
                }
            }
            dirs
        }
    }
}

/// Sampled Coriolis bound `k_c` with `|C(q, v)| <= k_c |v|`, inflated by
/// `safety_factor`.
pub fn coriolis_bound(
    model: &dyn MechanicalModel,
    q_grid: &GridSpec,
    safety_factor: f64,
) -> Result<f64> {
    check_len("configuration grid", q_grid.dim(), model.dof())?;
    let dirs = unit_directions(model.dof());
    let (norms, _) = crate::grid::scan(q_grid, |q| {
        let max = dirs
            .iter()
            .map(|v| spectral_norm(&model.coriolis(q, v)))
            .fold(0.0, f64::max);
        Ok(Some(vec![max]))
    })?;
    Ok(safety_factor * norms.into_iter().fold(0.0, f64::max))
}

#![allow(dead_code)]

use cbf_compat::barrier::BarrierKind;
use cbf_compat::controller::FilterOutput;
use cbf_compat::dynamics::TwoLinkArm;
use cbf_compat::{CompatController, CompatProblem, Result, Scenario, ScenarioConfig};
use nalgebra::{DMatrix, DVector};

pub fn velocity_limit() -> Scenario {
    ScenarioConfig::velocity_limit().build().unwrap()
}

pub fn ellipsoid() -> Scenario {
    ScenarioConfig::ellipsoid_workspace().build().unwrap()
}

pub fn state(v: [f64; 4]) -> DVector<f64> {
    DVector::from_row_slice(&v)
}

/// Minimizer of `|u - k|_G^2 / 2` s.t. `a' u >= b` from the KKT system,
/// solved by LU with the constraint assumed active.
pub fn kkt_oracle(k: &DVector<f64>, a: &DVector<f64>, b: f64, g: &DMatrix<f64>) -> (DVector<f64>, f64) {
    let n = k.len();
    let mut lhs = DMatrix::zeros(n + 1, n + 1);
    lhs.view_mut((0, 0), (n, n)).copy_from(g);
    for i in 0..n {
        lhs[(i, n)] = -a[i];
        lhs[(n, i)] = a[i];
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs.rows_mut(0, n).copy_from(&(g * k));
    rhs[n] = b;
    let sol = lhs.lu().solve(&rhs).expect("KKT system is nonsingular");
    (sol.rows(0, n).into_owned(), sol[n])
}

/// Oracle for one filter evaluation of `ctrl` at `x`.
pub fn oracle_filter(ctrl: &CompatController, model: &TwoLinkArm, x: &DVector<f64>) -> DVector<f64> {
    let q = x.rows(0, 2).into_owned();
    let lie = ctrl.barrier.lie_derivatives(model, x).unwrap();
    let k = ctrl.nominal_control(model, x);
    let b = -lie.lf - ctrl.barrier.alpha.eval(ctrl.barrier.eval_h(x));
    if lie.lg.dot(&k) >= b {
        return k;
    }
    let g = ctrl.weight.matrix(model, &q).unwrap();
    let (u, lambda) = kkt_oracle(&k, &lie.lg, b, &g);
    assert!(lambda >= 0.0, "active constraint must carry a nonnegative multiplier");
    u
}

pub fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}

pub fn is_high_order(ctrl: &CompatController) -> bool {
    matches!(ctrl.barrier.kind, BarrierKind::HighOrder { .. })
}

pub fn filtered(out: &FilterOutput) -> bool {
    out.z < 0.0
}

/// `x' = u` with `k = -x`, `V = x^2 / 2`, `h = x + 1`, `alpha(h) = h / 2`.
/// The margin is `z = (1 - x) / 2` and the alignment is `x`, so `{V <= nu}`
/// is certified exactly for `nu <= 1/2`.
pub struct ScalarIntegrator;

impl CompatProblem for ScalarIntegrator {
    fn state_dim(&self) -> usize {
        1
    }
    fn drift(&self, _x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::zeros(1))
    }
    fn input_matrix(&self, _x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(1, 1))
    }
    fn barrier(&self, x: &DVector<f64>) -> f64 {
        x[0] + 1.0
    }
    fn barrier_gradient(&self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, 1.0)
    }
    fn alpha(&self, h: f64) -> f64 {
        0.5 * h
    }
    fn lyapunov(&self, x: &DVector<f64>) -> f64 {
        0.5 * x[0] * x[0]
    }
    fn lyapunov_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }
    fn nominal(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(-x)
    }
    fn weight_inverse(&self, _x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(1, 1))
    }
}

/// Smallest grid value above 1 on a uniform axis, which fixes the level at
/// which the scalar example's grid check starts failing.
pub fn scalar_grid_threshold(lo: f64, hi: f64, points: usize) -> f64 {
    let h = (hi - lo) / (points - 1) as f64;
    let i = ((1.0 - lo) / h).floor() as usize + 1;
    let x = lo + h * i as f64;
    0.5 * x * x
}

//! Bisection for the largest certifiable Lyapunov level.
//!
//! The scalar system `x' = u` with `k = -x`, `V = x^2 / 2`, barrier
//! `h = x + 1` and `alpha(h) = h / 2` has margin `z = (1 - x) / 2` and
//! alignment `grad V g g' grad h = x`, so `{V <= nu}` is certified exactly
//! when its right end `sqrt(2 nu)` stays at or below 1, i.e. `nu <= 1/2`.

use cbf_compat::certify::{max_certifiable_nu, max_certifiable_nu_full_state, verify_cbf_stabilizable};
use cbf_compat::{CompatProblem, GridAxis, GridSpec, MechanicalLoop, Result, ScenarioConfig};
use nalgebra::{DMatrix, DVector};

struct ScalarIntegrator;

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

fn main() -> Result<()> {
    // spacing 1e-6, below the final bisection bracket
    let grid = GridSpec::new(vec![GridAxis::new(-2.0, 2.0, 4_000_001)]);
    let search = max_certifiable_nu(0.1, 2.0, |nu| verify_cbf_stabilizable(&ScalarIntegrator, nu, &grid))?;
    println!(
        "scalar example: nu* = {:.7} (exact 0.5), non-monotone: {}",
        search.nu, search.non_monotone
    );
    let failing = verify_cbf_stabilizable(&ScalarIntegrator, 1.0, &grid)?;
    if let Some(c) = failing.counterexamples.first() {
        println!(
            "at nu = 1: {} violations, first at x = {:.3} with z = {:.4}",
            failing.violations, c.state[0], c.value
        );
    }

    let scn = ScenarioConfig::velocity_limit().build()?;
    let ctrl = scn.controller()?;
    let arm = MechanicalLoop::new(&ctrl, &scn.model);
    let search = max_certifiable_nu_full_state(&arm, &scn.state_grid, 0.1, 10.0)?;
    println!("velocity-limit design: nu* = {} (the whole range)", search.nu);
    Ok(())
}

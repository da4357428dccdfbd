//! Structural properties of the two-link arm model: inertia at the home
//! configuration, skew-symmetry of `M' - 2C`, and the Coriolis bound used
//! when tuning `rho`.

use cbf_compat::dynamics::{coriolis_bound, CORIOLIS_SAFETY_FACTOR};
use cbf_compat::{two_link_arm, GridSpec, MechanicalModel, Result, TwoLinkArmParams};
use nalgebra::DVector;

fn main() -> Result<()> {
    let arm = two_link_arm(TwoLinkArmParams::default())?;
    let home = DVector::zeros(2);
    println!("M(0) = {}", arm.mass_matrix(&home));
    println!("tau_g(0) = {}", arm.gravity_torque(&home).transpose());

    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let t = i as f64 * 0.37;
        let q = DVector::from_vec(vec![t.sin() * 3.0, (1.7 * t).cos() * 3.0]);
        let v = DVector::from_vec(vec![(0.3 * t).cos() * 2.0, (2.1 * t).sin() * 2.0]);
        let n = arm.mass_matrix_dot(&q, &v) - arm.coriolis(&q, &v) * 2.0;
        worst = worst.max((&n + n.transpose()).amax());
    }
    println!("max |N + N'| with N = M' - 2C over 50 states: {worst:.2e}");

    let kc = coriolis_bound(&arm, &GridSpec::default_configuration(2), CORIOLIS_SAFETY_FACTOR)?;
    println!("k_c over [-pi, pi]^2 (x{CORIOLIS_SAFETY_FACTOR}): {kc:.4}");
    Ok(())
}

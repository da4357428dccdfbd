//! Evaluate the safety filter at a few states of the ellipsoidal-workspace
//! scenario and compare it with the nominal PD-plus-gravity command.

use cbf_compat::{ScenarioConfig, Result};
use nalgebra::DVector;

fn main() -> Result<()> {
    let scn = ScenarioConfig::ellipsoid_workspace().build()?;
    let ctrl = scn.controller()?;

    let states = [
        [0.9, 0.0, 0.0, 0.0],   // ellipsoid centre, at rest
        [0.5, 0.2, -0.4, 0.0],  // heading for the boundary
        [0.2, 0.1, -0.3, 0.3],  // near the boundary, still moving out
        [1.2, -0.3, 0.6, -0.2], // moving away from the centre
    ];
    println!("{:>28}  {:>9}  {:>20}  {:>20}  branch", "x", "z", "nominal", "filtered");
    for x in states {
        let x = DVector::from_row_slice(&x);
        let k = ctrl.nominal_control(&scn.model, &x);
        let out = ctrl.control(&scn.model, &x)?;
        println!(
            "{:>28}  {:>9.4}  {:>20}  {:>20}  {:?}",
            format!("{:?}", x.as_slice()),
            out.z,
            format!("({:.3}, {:.3})", k[0], k[1]),
            format!("({:.3}, {:.3})", out.control[0], out.control[1]),
            out.branch,
        );
    }
    Ok(())
}

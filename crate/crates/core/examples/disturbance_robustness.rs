//! Add the matched disturbance `d_i(t) = 0.1 sin(t)` to both bundled designs
//! and report how far trajectories leave the origin and the safe set.

use cbf_compat::scenario::DisturbanceConfig;
use cbf_compat::sim::{integrate, trajectory_metrics};
use cbf_compat::{Result, ScenarioConfig};

fn main() -> Result<()> {
    for base in [ScenarioConfig::velocity_limit(), ScenarioConfig::ellipsoid_workspace()] {
        let mut cfg = base.clone();
        cfg.disturbance = Some(DisturbanceConfig {
            amplitudes_nm: vec![0.1, 0.1],
            frequencies_rad_per_s: vec![1.0, 1.0],
        });
        let scn = cfg.build()?;
        let ctrl = scn.controller()?;
        println!("{}:", scn.name);
        for x0 in &scn.initial_states {
            let traj = integrate(&scn.model, &ctrl, x0, &scn.sim).map_err(|f| f.cause)?;
            let m = trajectory_metrics(&traj).expect("nonempty");
            let k10 = (10.0 / scn.sim.dt).round() as usize;
            let at10 = traj.samples[k10].state.norm();
            let sup = traj.samples[k10..].iter().map(|s| s.state.norm()).fold(0.0, f64::max);
            println!(
                "  x0 = {:?}: min h = {:.3e}, min c = {}, sup |x| on [10, 30] / |x(10)| = {:.2}",
                x0.as_slice(),
                m.min_h,
                m.min_c.map_or("-".into(), |c| format!("{c:.3e}")),
                sup / at10
            );
        }
    }
    Ok(())
}

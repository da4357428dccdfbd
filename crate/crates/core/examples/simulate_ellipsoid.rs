//! Simulate the ellipsoidal-workspace design from its configured initial
//! states and write one CSV per run.
//!
//! Usage: `cargo run --release --example simulate_ellipsoid [out_dir]`

use std::fs::File;
use std::path::PathBuf;

use cbf_compat::sim::{integrate, trajectory_metrics, write_csv};
use cbf_compat::{Result, ScenarioConfig};

fn main() -> Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/simulate_ellipsoid".into()));
    std::fs::create_dir_all(&out)?;

    let scn = ScenarioConfig::ellipsoid_workspace().build()?;
    let ctrl = scn.controller()?;
    for (i, x0) in scn.initial_states.iter().enumerate() {
        let traj = match integrate(&scn.model, &ctrl, x0, &scn.sim) {
            Ok(t) => t,
            Err(f) => {
                eprintln!("{f}");
                f.partial
            }
        };
        let path = out.join(format!("run_{i}.csv"));
        write_csv(&traj, File::create(&path)?)?;
        let m = trajectory_metrics(&traj).expect("at least one sample");
        println!(
            "x0 = {:?}: min h = {:.2e}, min c = {:.2e}, max dV = {:.2e}, |x(T)| = {:.2e}, steps per branch {:?} -> {}",
            x0.as_slice(),
            m.min_h,
            m.min_c.unwrap_or(f64::NAN),
            m.max_lyapunov_increase,
            m.terminal_norm,
            m.branch_counts,
            path.display()
        );
    }
    Ok(())
}

//! Grid-certify the velocity-limit design: computed torque with the barrier
//! `h = 0.01 - |v|^2 / 2` and filter weight `M^-T M^-1`. The weighted
//! alignment reduces to `-|v|^2`, so every Lyapunov level should pass.

use cbf_compat::certify::{lipschitz_diagnostic, max_certifiable_nu_full_state, verify_cbf_stabilizable};
use cbf_compat::{MechanicalLoop, Result, ScenarioConfig};

fn main() -> Result<()> {
    let scn = ScenarioConfig::velocity_limit().build()?;
    let ctrl = scn.controller()?;
    let problem = MechanicalLoop::new(&ctrl, &scn.model);

    for nu in [0.1, 1.0, 10.0] {
        let report = verify_cbf_stabilizable(&problem, nu, &scn.state_grid)?;
        let lipschitz = lipschitz_diagnostic(&problem, nu, &scn.state_grid)?;
        println!(
            "nu = {nu:>5}: stabilizable {} ({} states checked, {:.2} s), Lipschitz diagnostic {}",
            verdict(report.pass),
            report.evaluated,
            report.wall_time_s,
            verdict(lipschitz.pass),
        );
    }

    let search = max_certifiable_nu_full_state(&problem, &scn.state_grid, 0.1, 10.0)?;
    println!(
        "largest certified level in [0.1, 10]: {} after {} probes",
        search.nu,
        search.probes.len()
    );
    Ok(())
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

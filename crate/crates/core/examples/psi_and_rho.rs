//! Configuration-only certification of the ellipsoidal workspace design:
//! check `psi(q) > 0` over `{q' K_p q / 2 <= nu}` inside the workspace and
//! tune the augmentation gain `rho`.
//!
//! With the bundled two-link arm the check fails: the joint-space origin lies
//! just outside the workspace, and the off-diagonal inertia makes the
//! `-grad c' M^-1 K_p q` term negative on parts of the workspace edge. The
//! example prints the two terms of `psi` at the violations and the pointwise
//! gain `rho(q)` at configurations where `psi` is positive.

use cbf_compat::barrier::BarrierKind;
use cbf_compat::certify::{rho_terms, verify_psi};
use cbf_compat::{Error, MechanicalModel, Result, ScenarioConfig};
use nalgebra::DVector;

fn main() -> Result<()> {
    let scn = ScenarioConfig::ellipsoid_workspace().build()?;
    let BarrierKind::HighOrder { constraint, .. } = &scn.barrier.kind else {
        unreachable!("bundled scenario uses a high-order barrier");
    };
    let kc = scn.coriolis_bound()?;
    println!("Coriolis bound k_c = {kc:.4}");

    for nu in [0.5, 1.0, 2.0] {
        let r = verify_psi(&scn.barrier, &scn.model, &scn.nominal, nu, &scn.q_grid)?;
        println!(
            "nu = {nu}: psi {} on {} configurations ({} violations)",
            if r.pass { "positive" } else { "NOT positive" },
            r.evaluated,
            r.violations
        );
        for c in r.counterexamples.iter().take(3) {
            let q = DVector::from_vec(c.state.clone());
            let eval = constraint.eval(&q);
            let coupling = -(scn.model.inverse_mass(&q)? * &eval.gradient).dot(&(scn.nominal.kp() * &q));
            println!(
                "    q = {:>18}: psi = {:+.4} = {:+.4} (gradient term) {:+.4} (c)",
                format!("{:.4?}", c.state),
                c.value,
                coupling,
                eval.value
            );
        }
    }

    match scn.tune_rho() {
        Ok(t) => println!("rho = {:.4} at q = {:.4?}", t.rho, t.argmax),
        Err(e @ Error::PsiNotPositive { .. }) => println!("rho tuning refused: {e}"),
        Err(e) => return Err(e),
    }

    println!("pointwise gains where psi > 0:");
    for q in [[0.9, 0.0], [0.5, 0.3], [1.4, -0.3], [0.3, 0.0], [0.15, 0.0]] {
        let q = DVector::from_row_slice(&q);
        let t = rho_terms(&scn.barrier, &scn.model, &scn.nominal, &q, kc)?;
        println!(
            "    q = {:?}: psi = {:.4}, eta1 = {:.4}, eta2 = {:.4}, rho(q) = {:.4}",
            q.as_slice(),
            t.psi,
            t.eta1,
            t.eta2,
            t.rho
        );
    }
    Ok(())
}

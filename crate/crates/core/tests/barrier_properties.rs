mod common;

use cbf_compat::barrier::{chi_delta, BarrierKind};
use cbf_compat::dynamics::{join_state, to_affine, AffineDynamics};
use nalgebra::DVector;
use proptest::prelude::*;

fn vec2(lo: f64, hi: f64) -> impl Strategy<Value = DVector<f64>> {
    (lo..hi, lo..hi).prop_map(|(a, b)| DVector::from_vec(vec![a, b]))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn chi_is_c2_across_its_breakpoint(delta in 0.1..2.0f64, eps in 1e-9..1e-6f64) {
        let below = chi_delta(delta - eps, delta);
        let above = chi_delta(delta + eps, delta);
        prop_assert!((below.value - above.value).abs() < 1e-8);
        prop_assert!((below.d1 - above.d1).abs() < 1e-8);
        // d2 = 6 (s / delta - 1) / delta^2 vanishes linearly at the breakpoint
        prop_assert!((below.d2 - above.d2).abs() <= 7.0 * eps / delta.powi(3));
    }

    #[test]
    fn constraint_gradient_and_hessian_match_finite_differences(q in vec2(-1.0, 2.5)) {
        let scn = common::ellipsoid();
        let c = scn.barrier.constraint().unwrap();
        let e = c.eval(&q);
        let eps = 1e-6;
        for k in 0..2 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[k] += eps;
            qm[k] -= eps;
            let fd = (c.value(&qp) - c.value(&qm)) / (2.0 * eps);
            prop_assert!(rel_close(fd, e.gradient[k], 1e-6), "gradient {k}: {fd} vs {}", e.gradient[k]);
            let fd_h = (c.eval(&qp).gradient - c.eval(&qm).gradient) / (2.0 * eps);
            for j in 0..2 {
                prop_assert!(rel_close(fd_h[j], e.hessian[(j, k)], 1e-6), "hessian ({j},{k})");
            }
        }
    }

    #[test]
    fn barrier_state_gradient_matches_finite_differences(
        q in vec2(-1.0, 2.5), v in vec2(-2.0, 2.0), high_order in any::<bool>()
    ) {
        let scn = if high_order { common::ellipsoid() } else { common::velocity_limit() };
        let x = join_state(&q, &v);
        let grad = scn.barrier.gradient(&x);
        let eps = 1e-6;
        for k in 0..4 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += eps;
            xm[k] -= eps;
            let fd = (scn.barrier.eval_h(&xp) - scn.barrier.eval_h(&xm)) / (2.0 * eps);
            prop_assert!(rel_close(fd, grad[k], 1e-6), "component {k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn lie_derivatives_predict_the_barrier_rate(
        q in vec2(-1.0, 2.5), v in vec2(-2.0, 2.0), u in vec2(-30.0, 30.0), high_order in any::<bool>()
    ) {
        let scn = if high_order { common::ellipsoid() } else { common::velocity_limit() };
        let x = join_state(&q, &v);
        let lie = scn.barrier.lie_derivatives(&scn.model, &x).unwrap();
        let sys = to_affine(&scn.model);
        let xdot = sys.drift(&x).unwrap() + sys.input_matrix(&x).unwrap() * &u;
        let eps = 1e-6;
        let fd = (scn.barrier.eval_h(&(&x + &xdot * eps)) - scn.barrier.eval_h(&(&x - &xdot * eps))) / (2.0 * eps);
        let predicted = lie.lf + lie.lg.dot(&u);
        prop_assert!(rel_close(fd, predicted, 1e-6), "{fd} vs {predicted}");
    }

    #[test]
    fn zero_level_sets_of_smoothed_and_raw_constraints_agree(q in vec2(-1.0, 2.5)) {
        let scn = common::ellipsoid();
        let c = scn.barrier.constraint().unwrap();
        let raw = c.base.eval(&q).value;
        let smooth = c.value(&q);
        prop_assert_eq!(raw > 0.0, smooth > 0.0);
        prop_assert_eq!(raw < 0.0, smooth < 0.0);
    }
}

#[test]
fn smoothing_flattens_the_ellipsoid_centre() {
    let scn = common::ellipsoid();
    let BarrierKind::HighOrder { constraint, .. } = &scn.barrier.kind else {
        panic!("expected a high-order barrier");
    };
    let e = constraint.eval(&DVector::from_vec(vec![0.9, 0.0]));
    assert_eq!(e.value, 1.0);
    assert_eq!(e.gradient.amax(), 0.0);
    assert_eq!(e.hessian.amax(), 0.0);
}

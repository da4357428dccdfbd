use cbf_compat::dynamics::{forward_dynamics, to_affine, AffineDynamics, ConstantInertia};
use cbf_compat::linalg::is_spd;
use cbf_compat::{two_link_arm, MechanicalModel, TwoLinkArmParams};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn arm() -> cbf_compat::dynamics::TwoLinkArm {
    two_link_arm(TwoLinkArmParams::default()).unwrap()
}

fn params() -> impl Strategy<Value = TwoLinkArmParams> {
    (0.3..2.0f64, 0.3..2.0f64, 0.2..3.0f64, 0.2..3.0f64).prop_map(|(l1, l2, m1, m2)| TwoLinkArmParams {
        l1,
        l2,
        m1,
        m2,
        g0: 9.81,
    })
}

fn vec2(r: f64) -> impl Strategy<Value = DVector<f64>> {
    (-r..r, -r..r).prop_map(|(a, b)| DVector::from_vec(vec![a, b]))
}

proptest! {
    #[test]
    fn inertia_is_symmetric_positive_definite(p in params(), q in vec2(10.0)) {
        let m = two_link_arm(p).unwrap().mass_matrix(&q);
        prop_assert!(is_spd(&m));
        prop_assert!((m[(0, 1)] - m[(1, 0)]).abs() == 0.0);
    }

    #[test]
    fn inertia_rate_minus_twice_coriolis_is_skew(p in params(), q in vec2(4.0), v in vec2(3.0)) {
        let arm = two_link_arm(p).unwrap();
        let n = arm.mass_matrix_dot(&q, &v) - arm.coriolis(&q, &v) * 2.0;
        prop_assert!((&n + n.transpose()).amax() <= 1e-9);
    }

    #[test]
    fn closed_form_coriolis_matches_christoffel(p in params(), q in vec2(4.0), v in vec2(3.0)) {
        // the default trait method builds C from the inertia partials
        struct Generic(cbf_compat::dynamics::TwoLinkArm);
        impl MechanicalModel for Generic {
            fn dof(&self) -> usize { 2 }
            fn mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64> { self.0.mass_matrix(q) }
            fn mass_matrix_partial(&self, q: &DVector<f64>, k: usize) -> DMatrix<f64> {
                self.0.mass_matrix_partial(q, k)
            }
            fn gravity_torque(&self, q: &DVector<f64>) -> DVector<f64> { self.0.gravity_torque(q) }
        }
        let arm = two_link_arm(p).unwrap();
        let diff = arm.coriolis(&q, &v) - Generic(arm).coriolis(&q, &v);
        prop_assert!(diff.amax() <= 1e-12);
    }

    #[test]
    fn inertia_partials_match_finite_differences(q in vec2(4.0)) {
        let arm = arm();
        let eps = 1e-6;
        for k in 0..2 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[k] += eps;
            qm[k] -= eps;
            let fd = (arm.mass_matrix(&qp) - arm.mass_matrix(&qm)) / (2.0 * eps);
            let exact = arm.mass_matrix_partial(&q, k);
            prop_assert!((fd - &exact).amax() <= 1e-6 * exact.amax().max(1.0));
        }
    }

    #[test]
    fn gravity_is_the_gradient_of_potential_energy(q in vec2(4.0)) {
        // point masses at the link ends, heights measured along +y
        let pe = |q: &DVector<f64>| {
            let y1 = q[0].sin();
            let y2 = y1 + (q[0] + q[1]).sin();
            9.81 * (y1 + y2)
        };
        let eps = 1e-6;
        let tau = arm().gravity_torque(&q);
        for k in 0..2 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[k] += eps;
            qm[k] -= eps;
            let fd = (pe(&qp) - pe(&qm)) / (2.0 * eps);
            prop_assert!((fd - tau[k]).abs() <= 1e-6 * tau[k].abs().max(1.0));
        }
    }

    #[test]
    fn affine_form_reproduces_forward_dynamics(q in vec2(3.0), v in vec2(2.0), u in vec2(20.0)) {
        let arm = arm();
        let x = cbf_compat::dynamics::join_state(&q, &v);
        let sys = to_affine(&arm);
        let xdot = sys.drift(&x).unwrap() + sys.input_matrix(&x).unwrap() * &u;
        let acc = forward_dynamics(&arm, &q, &v, &u).unwrap();
        prop_assert!((xdot.rows(0, 2) - &v).amax() == 0.0);
        prop_assert!((xdot.rows(2, 2) - acc).amax() <= 1e-10);
    }
}

#[test]
fn constant_inertia_has_no_coriolis_or_gravity() {
    let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    let model = ConstantInertia::new(m.clone()).unwrap();
    let q = DVector::from_vec(vec![0.3, -1.0]);
    let v = DVector::from_vec(vec![1.0, 2.0]);
    assert_eq!(model.coriolis(&q, &v).amax(), 0.0);
    assert_eq!(model.gravity_torque(&q).amax(), 0.0);
    assert_eq!(model.mass_matrix(&q), m);
    assert!(ConstantInertia::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
}

//! Offline grid certification of compatible safety/stability designs.
//!
//! A Lyapunov sublevel set `{V <= nu}` is accepted when, at every grid state
//! inside it and inside the safe set, either the weighted alignment
//! `grad V' g G^-1 g' grad h` is negative or the nominal law already satisfies
//! the barrier condition (`z >= 0`). For mechanical systems with a high-order
//! barrier the configuration-only test `psi(q) > 0` is used instead, and the
//! augmentation gain `rho` is tuned from it.
//!
//! Grid checks are sound only up to grid resolution.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::barrier::{BarrierKind, BarrierSpec, LieDerivatives};
use crate::controller::{CompatController, NominalLaw};
use crate::dynamics::{split_state, to_affine, AffineDynamics, MechanicalModel};
use crate::error::{check_len, Error, Result};
use crate::grid::{scan, GridSpec};
use crate::linalg::{spectral_norm, weighted_norm_sq};

/// Counterexamples kept verbatim in a report; the total is always counted.
pub const MAX_STORED_COUNTEREXAMPLES: usize = 1000;
/// `|L_g h|` at or below this counts as vanishing for the Lipschitz diagnostic.
pub const LG_ZERO_TOL: f64 = 1e-10;
/// `|grad h|` at or below this counts as vanishing for the Lipschitz diagnostic.
pub const GRAD_ZERO_TOL: f64 = 1e-8;
pub const BISECTION_ITERATIONS: usize = 20;
const MONOTONICITY_PROBES: usize = 8;

/// Ingredients of a compatibility check for a generic control-affine system.
pub trait CompatProblem: Sync {
    fn state_dim(&self) -> usize;
    fn drift(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn input_matrix(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;
    fn barrier(&self, x: &DVector<f64>) -> f64;
    fn barrier_gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn alpha(&self, h: f64) -> f64;
    fn lyapunov(&self, x: &DVector<f64>) -> f64;
    fn lyapunov_gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn nominal(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn weight_inverse(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// Safe set membership.
    fn contains(&self, x: &DVector<f64>) -> bool {
        self.barrier(x) >= 0.0
    }

    fn interior(&self, x: &DVector<f64>) -> bool {
        self.barrier(x) > 0.0
    }

    fn lie_derivatives(&self, x: &DVector<f64>) -> Result<LieDerivatives> {
        let grad = self.barrier_gradient(x);
        Ok(LieDerivatives {
            lf: grad.dot(&self.drift(x)?),
            lg: self.input_matrix(x)?.transpose() * grad,
        })
    }

    fn margin_z(&self, x: &DVector<f64>) -> Result<f64> {
        let lie = self.lie_derivatives(x)?;
        Ok(lie.lf + lie.lg.dot(&self.nominal(x)?) + self.alpha(self.barrier(x)))
    }

    /// `grad V' g G^-1 g' grad h`.
    fn alignment(&self, x: &DVector<f64>) -> Result<f64> {
        let g = self.input_matrix(x)?;
        let gv = g.transpose() * self.lyapunov_gradient(x);
        let gh = g.transpose() * self.barrier_gradient(x);
        Ok((self.weight_inverse(x)? * gh).dot(&gv))
    }

    /// States that grid sampling should always include, such as critical
    /// points of the barrier that the grid may straddle.
    fn probe_states(&self, _grid: &GridSpec) -> Vec<DVector<f64>> {
        Vec::new()
    }
}

/// A controller bound to a mechanical model.
#[derive(Clone, Copy)]
pub struct MechanicalLoop<'a> {
    pub ctrl: &'a CompatController,
    pub model: &'a dyn MechanicalModel,
}

impl<'a> MechanicalLoop<'a> {
    pub fn new(ctrl: &'a CompatController, model: &'a dyn MechanicalModel) -> Self {
        Self { ctrl, model }
    }
}

impl CompatProblem for MechanicalLoop<'_> {
    fn state_dim(&self) -> usize {
        2 * self.model.dof()
    }
    fn drift(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        to_affine(self.model).drift(x)
    }
    fn input_matrix(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        to_affine(self.model).input_matrix(x)
    }
    fn barrier(&self, x: &DVector<f64>) -> f64 {
        self.ctrl.barrier.eval_h(x)
    }
    fn barrier_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.ctrl.barrier.gradient(x)
    }
    fn alpha(&self, h: f64) -> f64 {
        self.ctrl.barrier.alpha.eval(h)
    }
    fn lyapunov(&self, x: &DVector<f64>) -> f64 {
        self.ctrl.nominal.lyapunov(self.model, x)
    }
    fn lyapunov_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.ctrl.nominal.lyapunov_gradient(self.model, x)
    }
    fn nominal(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.ctrl.nominal.control(self.model, x))
    }
    fn weight_inverse(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let q = x.rows(0, self.model.dof()).into_owned();
        self.ctrl.weight.inverse(self.model, &q)
    }
    fn contains(&self, x: &DVector<f64>) -> bool {
        self.ctrl.barrier.contains(x)
    }
    fn interior(&self, x: &DVector<f64>) -> bool {
        self.ctrl.barrier.interior(x)
    }
    fn lie_derivatives(&self, x: &DVector<f64>) -> Result<LieDerivatives> {
        self.ctrl.barrier.lie_derivatives(self.model, x)
    }

    /// The centre of an ellipsoid constraint is its only critical point;
    /// it is crossed with the velocity axes of the grid.
    fn probe_states(&self, grid: &GridSpec) -> Vec<DVector<f64>> {
        let n = self.model.dof();
        let Some(constraint) = self.ctrl.barrier.constraint() else {
            return Vec::new();
        };
        if grid.dim() != 2 * n {
            return Vec::new();
        }
        let velocities = GridSpec::new(grid.axes[n..].to_vec());
        velocities
            .points()
            .map(|v| crate::dynamics::join_state(&constraint.base.center, &v))
            .collect()
    }
}

/// Which condition a grid point violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Alignment is nonnegative but the nominal margin `z` is negative.
    NominalMarginOnAlignmentSet,
    /// `L_g h` vanishes outside the strict interior of the safe set.
    InputInfluenceVanishesOnBoundary,
    /// `L_g h` vanishes while `grad h` does not.
    InputInfluenceVanishesWithNonzeroGradient,
    /// `psi(q) <= 0`.
    PsiNotPositive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub state: Vec<f64>,
    pub condition: Condition,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertReport {
    pub check: String,
    pub pass: bool,
    pub nu: f64,
    pub rho: Option<f64>,
    /// First violations in grid-index order, capped at
    /// [`MAX_STORED_COUNTEREXAMPLES`].
    pub counterexamples: Vec<Counterexample>,
    pub violations: usize,
    pub evaluated: usize,
    pub grid: GridSpec,
    pub wall_time_s: f64,
}

impl CertReport {
    fn from_scan(
        check: &str,
        nu: f64,
        grid: &GridSpec,
        mut found: Vec<Counterexample>,
        evaluated: usize,
        started: Instant,
    ) -> Self {
        let violations = found.len();
        found.truncate(MAX_STORED_COUNTEREXAMPLES);
        Self {
            check: check.to_string(),
            pass: violations == 0,
            nu,
            rho: None,
            counterexamples: found,
            violations,
            evaluated,
            grid: grid.clone(),
            wall_time_s: started.elapsed().as_secs_f64(),
        }
    }
}

fn to_vec(x: &DVector<f64>) -> Vec<f64> {
    x.iter().copied().collect()
}

pub fn alignment<P: CompatProblem + ?Sized>(problem: &P, x: &DVector<f64>) -> Result<f64> {
    problem.alignment(x)
}

/// Checks that `{V <= nu}` is CBF-stabilizable on the grid: wherever the
/// alignment is nonnegative, `z >= 0` must hold.
pub fn verify_cbf_stabilizable<P: CompatProblem + ?Sized>(
    problem: &P,
    nu: f64,
    grid: &GridSpec,
) -> Result<CertReport> {
    let started = Instant::now();
    check_len("grid", grid.dim(), problem.state_dim())?;
    let (found, evaluated) = scan(grid, |x| {
        if problem.lyapunov(x) > nu || !problem.contains(x) {
            return Ok(None);
        }
        if problem.alignment(x)? < 0.0 {
            return Ok(Some(vec![]));
        }
        let z = problem.margin_z(x)?;
        Ok(Some(if z < 0.0 {
            vec![Counterexample {
                state: to_vec(x),
                condition: Condition::NominalMarginOnAlignmentSet,
                value: z,
            }]
        } else {
            vec![]
        }))
    })?;
    Ok(CertReport::from_scan(
        "cbf_stabilizable",
        nu,
        grid,
        found,
        evaluated,
        started,
    ))
}

fn lipschitz_violations_at<P: CompatProblem + ?Sized>(
    problem: &P,
    x: &DVector<f64>,
) -> Result<Vec<Counterexample>> {
    let lg_norm = problem.lie_derivatives(x)?.lg.norm();
    if lg_norm > LG_ZERO_TOL {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    if !problem.interior(x) {
        out.push(Counterexample {
            state: to_vec(x),
            condition: Condition::InputInfluenceVanishesOnBoundary,
            value: problem.barrier(x),
        });
    }
    let grad_norm = problem.barrier_gradient(x).norm();
    if grad_norm > GRAD_ZERO_TOL {
        out.push(Counterexample {
            state: to_vec(x),
            condition: Condition::InputInfluenceVanishesWithNonzeroGradient,
            value: grad_norm,
        });
    }
    Ok(out)
}

/// Lipschitz-continuity diagnostic: wherever `L_g h` vanishes on
/// `{V <= nu}` within the safe set, the state must be strictly interior and
/// `grad h` must vanish too.
pub fn lipschitz_diagnostic<P: CompatProblem + ?Sized>(
    problem: &P,
    nu: f64,
    grid: &GridSpec,
) -> Result<CertReport> {
    let started = Instant::now();
    check_len("grid", grid.dim(), problem.state_dim())?;
    let relevant = |x: &DVector<f64>| problem.lyapunov(x) <= nu && problem.contains(x);
    let (mut found, mut evaluated) = scan(grid, |x| {
        if !relevant(x) {
            return Ok(None);
        }
        lipschitz_violations_at(problem, x).map(Some)
    })?;
    for x in problem.probe_states(grid) {
        if relevant(&x) {
            evaluated += 1;
            found.extend(lipschitz_violations_at(problem, &x)?);
        }
    }
    Ok(CertReport::from_scan(
        "lipschitz_diagnostic",
        nu,
        grid,
        found,
        evaluated,
        started,
    ))
}

fn high_order_parts(
    barrier: &BarrierSpec,
) -> Result<(&crate::barrier::SmoothedConstraint, &crate::barrier::ClassKappa)> {
    match &barrier.kind {
        BarrierKind::HighOrder { constraint, phi } => Ok((constraint, phi)),
        _ => Err(Error::InvalidParameter(
            "psi is defined for high-order barriers only".into(),
        )),
    }
}

/// `psi(q) = -grad c' M^-1 K_p q + alpha(phi(c(q)))`: the margin `z` at rest
/// under the PD-plus-gravity law.
pub fn psi(
    barrier: &BarrierSpec,
    model: &dyn MechanicalModel,
    law: &NominalLaw,
    q: &DVector<f64>,
) -> Result<f64> {
    let (constraint, phi) = high_order_parts(barrier)?;
    let c = constraint.eval(q);
    let minv = model.inverse_mass(q)?;
    Ok(-(minv * &c.gradient).dot(&(law.kp() * q)) + barrier.alpha.eval(phi.eval(c.value)))
}

/// Pointwise terms of the `rho` tuning rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoTerms {
    pub psi: f64,
    /// `k_c |grad c' M^-1| + |hess c|`
    pub eta1: f64,
    /// `|grad c' M^-1 K_d|`
    pub eta2: f64,
    /// Positive root of `rho^2 psi - rho eta1 - eta2 = 0`.
    pub rho: f64,
}

pub fn rho_terms(
    barrier: &BarrierSpec,
    model: &dyn MechanicalModel,
    law: &NominalLaw,
    q: &DVector<f64>,
    coriolis_bound: f64,
) -> Result<RhoTerms> {
    let (constraint, phi) = high_order_parts(barrier)?;
    let c = constraint.eval(q);
    let minv = model.inverse_mass(q)?;
    // row vector grad c' M^-1, stored as a column
    let row = &minv * &c.gradient;
    let psi = -row.dot(&(law.kp() * q)) + barrier.alpha.eval(phi.eval(c.value));
    let eta1 = coriolis_bound * row.norm() + spectral_norm(&c.hessian);
    let eta2 = (law.kd().transpose() * &row).norm();
    let rho = (eta1 + (eta1 * eta1 + 4.0 * psi * eta2).sqrt()) / (2.0 * psi);
    Ok(RhoTerms {
        psi,
        eta1,
        eta2,
        rho,
    })
}

fn in_certified_configuration(
    barrier: &BarrierSpec,
    law: &NominalLaw,
    nu: f64,
    q: &DVector<f64>,
) -> bool {
    law.in_potential_level(q, nu) && barrier.constraint_value(q).is_some_and(|c| c >= 0.0)
}

/// Checks `psi(q) > 0` on every grid configuration with `P(q) <= nu` and
/// `c(q) >= 0`.
pub fn verify_psi(
    barrier: &BarrierSpec,
    model: &dyn MechanicalModel,
    law: &NominalLaw,
    nu: f64,
    q_grid: &GridSpec,
) -> Result<CertReport> {
    let started = Instant::now();
    high_order_parts(barrier)?;
    check_len("configuration grid", q_grid.dim(), model.dof())?;
    let (found, evaluated) = scan(q_grid, |q| {
        if !in_certified_configuration(barrier, law, nu, q) {
            return Ok(None);
        }
        let value = psi(barrier, model, law, q)?;
        Ok(Some(if value > 0.0 {
            vec![]
        } else {
            vec![Counterexample {
                state: to_vec(q),
                condition: Condition::PsiNotPositive,
                value,
            }]
        }))
    })?;
    Ok(CertReport::from_scan("psi", nu, q_grid, found, evaluated, started))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoTuning {
    pub rho: f64,
    /// Configuration attaining the maximum.
    pub argmax: Vec<f64>,
    pub terms: RhoTerms,
    pub coriolis_bound: f64,
    pub evaluated: usize,
}

/// `rho = max over P_nu ∩ Q of (eta1 + sqrt(eta1^2 + 4 psi eta2)) / (2 psi)`.
pub fn tune_rho(
    barrier: &BarrierSpec,
    model: &dyn MechanicalModel,
    law: &NominalLaw,
    nu: f64,
    q_grid: &GridSpec,
    coriolis_bound: f64,
) -> Result<RhoTuning> {
    check_len("configuration grid", q_grid.dim(), model.dof())?;
    let (samples, evaluated) = scan(q_grid, |q| {
        if !in_certified_configuration(barrier, law, nu, q) {
            return Ok(None);
        }
        let terms = rho_terms(barrier, model, law, q, coriolis_bound)?;
        Ok(Some(vec![(to_vec(q), terms)]))
    })?;
    if let Some((q, t)) = samples.iter().find(|(_, t)| t.psi <= 0.0) {
        return Err(Error::PsiNotPositive {
            q: q.clone(),
            psi: t.psi,
        });
    }
    let (argmax, terms) = samples
        .into_iter()
        .reduce(|best, s| if s.1.rho > best.1.rho { s } else { best })
        .ok_or(Error::EmptyGrid)?;
    Ok(RhoTuning {
        rho: terms.rho,
        argmax,
        terms,
        coriolis_bound,
        evaluated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuSearch {
    pub nu: f64,
    pub report: CertReport,
    /// A passing probe was found above a failing one.
    pub non_monotone: bool,
    /// Every probe `(nu, pass)` in evaluation order.
    pub probes: Vec<(f64, bool)>,
}

/// Largest `nu` in `[lo, hi]` accepted by `probe`, by bisection.
///
/// Passing sets need not be nested, so the range is also probed at evenly
/// spaced points; if any probe passes above a failing probe the search is
/// flagged non-monotone and the largest passing probe is returned.
pub fn max_certifiable_nu<F>(lo: f64, hi: f64, probe: F) -> Result<NuSearch>
where
    F: Fn(f64) -> Result<CertReport>,
{
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidParameter(format!(
            "nu range [{lo}, {hi}] must satisfy 0 < lo <= hi"
        )));
    }
    let mut probes = Vec::new();
    let mut best: Option<CertReport> = None;
    let mut run = |nu: f64, probes: &mut Vec<(f64, bool)>| -> Result<bool> {
        let report = probe(nu)?;
        let pass = report.pass;
        probes.push((nu, pass));
        if pass && best.as_ref().is_none_or(|b| nu > b.nu) {
            best = Some(report);
        }
        Ok(pass)
    };

    if !run(lo, &mut probes)? {
        return Err(Error::NonePassing { lo, hi });
    }
    if !run(hi, &mut probes)? {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..BISECTION_ITERATIONS {
            let mid = 0.5 * (a + b);
            if run(mid, &mut probes)? {
                a = mid;
            } else {
                b = mid;
            }
        }
        for i in 1..MONOTONICITY_PROBES {
            let nu = lo + (hi - lo) * i as f64 / MONOTONICITY_PROBES as f64;
            run(nu, &mut probes)?;
        }
    }
    let lowest_fail = probes
        .iter()
        .filter(|p| !p.1)
        .map(|p| p.0)
        .fold(f64::INFINITY, f64::min);
    let non_monotone = probes.iter().any(|p| p.1 && p.0 > lowest_fail);
    let report = best.expect("lower bound passed");
    Ok(NuSearch {
        nu: report.nu,
        report,
        non_monotone,
        probes,
    })
}

/// [`max_certifiable_nu`] over full-state CBF-stabilizability.
pub fn max_certifiable_nu_full_state<P: CompatProblem + ?Sized>(
    problem: &P,
    grid: &GridSpec,
    lo: f64,
    hi: f64,
) -> Result<NuSearch> {
    max_certifiable_nu(lo, hi, |nu| verify_cbf_stabilizable(problem, nu, grid))
}

/// [`max_certifiable_nu`] over the configuration-only `psi` condition.
pub fn max_certifiable_nu_psi(
    ctrl: &CompatController,
    model: &dyn MechanicalModel,
    q_grid: &GridSpec,
    lo: f64,
    hi: f64,
) -> Result<NuSearch> {
    max_certifiable_nu(lo, hi, |nu| {
        verify_psi(&ctrl.barrier, model, &ctrl.nominal, nu, q_grid)
    })
}

/// Lower bound `psi - eta1 / rho - eta2 / rho^2` on `z` for `|v| <= 1/rho`
/// and `c' >= 0`.
pub fn margin_lower_bound(terms: &RhoTerms, rho: f64) -> f64 {
    terms.psi - terms.eta1 / rho - terms.eta2 / (rho * rho)
}

/// Velocity norm used by the augmented-branch energy argument.
pub fn velocity_norm(x: &DVector<f64>, dof: usize) -> f64 {
    split_state(x, dof).1.norm()
}

/// `|grad c|^2_{M^-1}`.
pub fn constraint_gradient_norm_sq(
    barrier: &BarrierSpec,
    model: &dyn MechanicalModel,
    q: &DVector<f64>,
) -> Result<f64> {
    let (constraint, _) = high_order_parts(barrier)?;
    let g = constraint.eval(q).gradient;
    Ok(weighted_norm_sq(&g, &model.inverse_mass(q)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::{ClassKappa, EllipsoidConstraint, SmoothedConstraint};
    use crate::dynamics::{two_link_arm, TwoLinkArmParams};
    use crate::grid::GridAxis;

    fn ellipsoid_barrier() -> BarrierSpec {
        let e = EllipsoidConstraint::new(
            0.8,
            DVector::from_vec(vec![0.9, 0.0]),
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0])),
        )
        .unwrap();
        BarrierSpec::high_order(
            SmoothedConstraint::new(e, 0.7).unwrap(),
            ClassKappa::identity(),
            ClassKappa::identity(),
        )
        .unwrap()
    }

    fn pd() -> NominalLaw {
        NominalLaw::PdGravity {
            kp: DMatrix::identity(2, 2),
            kd: DMatrix::identity(2, 2) * 0.5,
        }
    }

    fn fake_report(nu: f64, pass: bool) -> CertReport {
        CertReport {
            check: "fake".into(),
            pass,
            nu,
            rho: None,
            counterexamples: vec![],
            violations: usize::from(!pass),
            evaluated: 1,
            grid: GridSpec::new(vec![GridAxis::point(0.0)]),
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn psi_at_ellipsoid_centre_is_one() {
        let arm = two_link_arm(TwoLinkArmParams::default()).unwrap();
        let q = DVector::from_vec(vec![0.9, 0.0]);
        let value = psi(&ellipsoid_barrier(), &arm, &pd(), &q).unwrap();
        assert!((value - 1.0).abs() < 1e-15);
        let grid = GridSpec::new(vec![GridAxis::point(0.9), GridAxis::point(0.0)]);
        let report = verify_psi(&ellipsoid_barrier(), &arm, &pd(), 1.0, &grid).unwrap();
        assert!(report.pass);
        assert_eq!(report.evaluated, 1);
    }

    #[test]
    fn flat_region_needs_no_augmentation() {
        let arm = two_link_arm(TwoLinkArmParams::default()).unwrap();
        let q = DVector::from_vec(vec![0.95, 0.05]);
        let t = rho_terms(&ellipsoid_barrier(), &arm, &pd(), &q, 3.0).unwrap();
        assert_eq!((t.eta1, t.eta2, t.rho), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rho_is_the_positive_root() {
        let arm = two_link_arm(TwoLinkArmParams::default()).unwrap();
        for q in [[0.5, 0.2], [1.3, -0.3], [0.8, 0.45]] {
            let q = DVector::from_vec(q.to_vec());
            let t = rho_terms(&ellipsoid_barrier(), &arm, &pd(), &q, 2.5).unwrap();
            assert!(t.psi > 0.0 && t.rho > 0.0);
            let residual = t.rho * t.rho * t.psi - t.rho * t.eta1 - t.eta2;
            assert!(residual.abs() < 1e-10, "{residual}");
            assert!(margin_lower_bound(&t, t.rho).abs() < 1e-10);
        }
    }

    #[test]
    fn psi_needs_a_high_order_barrier() {
        let arm = two_link_arm(TwoLinkArmParams::default()).unwrap();
        let b = BarrierSpec::relative_degree_one(
            0.01,
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            ClassKappa::identity(),
        )
        .unwrap();
        assert!(psi(&b, &arm, &pd(), &DVector::zeros(2)).is_err());
    }

    #[test]
    fn bisection_finds_a_threshold() {
        let s = max_certifiable_nu(0.1, 5.0, |nu| Ok(fake_report(nu, nu <= 0.5))).unwrap();
        assert!(!s.non_monotone);
        assert!(s.nu <= 0.5 && 0.5 - s.nu < 4.9 / 2f64.powi(19));
        let all = max_certifiable_nu(0.1, 5.0, |nu| Ok(fake_report(nu, true))).unwrap();
        assert_eq!(all.nu, 5.0);
        assert!(matches!(
            max_certifiable_nu(0.1, 5.0, |nu| Ok(fake_report(nu, false))),
            Err(Error::NonePassing { .. })
        ));
    }

    #[test]
    fn non_nested_passing_sets_are_flagged() {
        let pass = |nu: f64| nu <= 0.3 || (2.0..=3.5).contains(&nu);
        let s = max_certifiable_nu(0.1, 4.0, |nu| Ok(fake_report(nu, pass(nu)))).unwrap();
        assert!(s.non_monotone);
        assert!(pass(s.nu) && s.nu > 2.0);
    }
}

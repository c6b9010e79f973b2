use std::sync::Arc;

use super::*;
use crate::assembly::{Family, ZeroSources};
use crate::fem::interpolate;
use crate::mesh::{build_rectangle_coupled_mesh, DiagonalPattern, Point2, RectangleTags};

fn spaces(family: Family, n: usize) -> Spaces {
    let mesh = build_rectangle_coupled_mesh(
        [0.0, 1.0, -1.0, 1.0],
        0.0,
        n,
        n,
        n,
        RectangleTags::mms(),
        DiagonalPattern::Alternating,
    )
    .unwrap();
    Spaces::of_family(Arc::new(mesh), family).unwrap()
}

fn zero_problem(family: Family, n: usize) -> Problem {
    Problem {
        spaces: spaces(family, n),
        coefficients: ProblemCoefficients::unit(),
        bcs: BoundaryConditions::mms(),
        sources: Arc::new(ZeroSources),
    }
}

/// Displacement at rest, vanishing on the exterior poroelastic boundary.
fn bulged_state(p: &Problem, amplitude: f64) -> TimeState {
    let mut s = TimeState::zeros(&p.spaces);
    let pi = std::f64::consts::PI;
    s.eta = interpolate(&p.spaces.eta, |x| [amplitude * (pi * x.x).sin() * (x.y + 1.0), 0.0]).unwrap();
    s.eta_prev = s.eta.clone();
    s
}

#[test]
fn zero_data_gives_zero_solution() {
    let p = zero_problem(Family::Lower, 4);
    let init = TimeState::zeros(&p.spaces);
    let mut solver = FpsiSolver::new(p, SolverConfig::new(0.01, 0.03), init).unwrap();
    let summary = solver.run(&mut []).unwrap();
    assert_eq!(summary.steps.len(), 3);
    assert_eq!(solver.state().max_abs(), 0.0);
    assert!((solver.state().t - 0.03).abs() < 1e-15);
}

#[test]
fn no_steps_returns_initial_state() {
    let p = zero_problem(Family::Lower, 2);
    let init = bulged_state(&p, 0.1);
    let mut solver = FpsiSolver::new(p, SolverConfig::new(0.01, 0.0), init.clone()).unwrap();
    let summary = solver.run(&mut []).unwrap();
    assert!(summary.steps.is_empty());
    assert_eq!(solver.into_state(), init);
}

#[test]
fn runs_are_deterministic() {
    let run = || {
        let p = zero_problem(Family::Lower, 3);
        let init = bulged_state(&p, 0.1);
        let mut s = FpsiSolver::new(p, SolverConfig::new(0.01, 0.02), init).unwrap();
        s.run(&mut []).unwrap();
        s.into_state()
    };
    let (a, b) = (run(), run());
    assert!(a.max_abs() > 0.0);
    assert_eq!(a, b);
}

#[test]
fn config_validation() {
    assert!(SolverConfig::new(0.0, 1.0).validate().is_err());
    assert!(SolverConfig::new(2.0, 4.0).validate().is_err());
    assert!(SolverConfig::new(0.3, 1.0).validate().is_err());
    assert!(SolverConfig::new(0.01, -1.0).validate().is_err());
    assert_eq!(SolverConfig::new(2.5e-4, 0.1).n_steps().unwrap(), 400);
    let cfg: SolverConfig = serde_json::from_str(r#"{"dt": 0.5, "t_final": 1.0}"#).unwrap();
    assert_eq!(cfg.residual_tol, 1e-8);
    assert!(serde_json::from_str::<SolverConfig>(r#"{"dt": 0.5, "t_final": 1.0, "bogus": 1}"#).is_err());
}

#[test]
fn mismatched_initial_state_is_rejected() {
    let p = zero_problem(Family::Lower, 2);
    let mut init = TimeState::zeros(&p.spaces);
    init.pp.push(0.0);
    assert!(FpsiSolver::new(p, SolverConfig::new(0.1, 0.1), init).is_err());
}

#[test]
fn residuals_are_small() {
    let p = zero_problem(Family::Higher, 2);
    let init = bulged_state(&p, 0.1);
    let mut solver = FpsiSolver::new(p, SolverConfig::new(0.01, 0.02), init).unwrap();
    let summary = solver.run(&mut []).unwrap();
    for f in Field::ALL {
        assert!(summary.max_residual(f) < 1e-10, "{}: {}", f.name(), summary.max_residual(f));
    }
}

#[test]
fn homogeneous_energy_decays() {
    for family in [Family::Lower, Family::Higher] {
        let p = zero_problem(family, 3);
        let init = bulged_state(&p, 1e-3);
        let mut solver = FpsiSolver::new(p, SolverConfig::new(0.01, 0.1), init).unwrap();
        let mut tracker = EnergyTracker::new(&solver, EnergyConstants::default()).unwrap();
        solver.run(&mut [&mut tracker]).unwrap();
        let report = tracker.report();
        assert_eq!(report.series.len(), 11);
        let energy: Vec<f64> =
            report.series.iter().map(|d| d.fluid_kinetic + d.solid_kinetic + d.elastic + d.storage).collect();
        assert!(energy[0] > 0.0);
        for w in energy.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-10), "{family:?}: {} > {}", w[1], w[0]);
        }
        assert!(energy[10] < energy[0]);
        assert_eq!(report.c1_sum, 0.0);
    }
}

#[test]
fn homogeneous_run_meets_bound_trivially() {
    let p = zero_problem(Family::Lower, 2);
    let init = TimeState::zeros(&p.spaces);
    let mut solver = FpsiSolver::new(p, SolverConfig::new(0.01, 0.05), init).unwrap();
    let mut tracker = EnergyTracker::new(&solver, EnergyConstants::default()).unwrap();
    solver.run(&mut [&mut tracker]).unwrap();
    let report = tracker.report();
    assert_eq!(report.lhs, 0.0);
    assert_eq!(report.rhs, 0.0);
    assert!(report.holds);
}

struct ScaledForce(f64);

impl Sources for ScaledForce {
    fn fluid_force(&self, p: Point2, t: f64) -> [f64; 2] {
        [self.0 * (1.0 + t) * p.x, self.0 * p.y]
    }
    fn solid_force(&self, p: Point2, t: f64) -> [f64; 2] {
        [0.0, self.0 * t * p.x]
    }
    fn darcy_source(&self, p: Point2, t: f64) -> f64 {
        self.0 * (t * p.y).sin()
    }
}

#[test]
fn small_data_zero_sources() {
    let s = spaces(Family::Lower, 2);
    let c = ProblemCoefficients::unit();
    let r = small_data_check(&s, &ZeroSources, &c, 0.1, 5, EnergyConstants::default()).unwrap();
    assert_eq!(r.lhs.len(), 5);
    assert_eq!(r.max_lhs(), 0.0);
    assert_eq!(r.threshold, 0.25);
    assert!(r.satisfied);
}

#[test]
fn small_data_scales_quadratically() {
    let s = spaces(Family::Lower, 2);
    let c = ProblemCoefficients::unit();
    let k = EnergyConstants::default();
    let a = small_data_check(&s, &ScaledForce(1.0), &c, 0.1, 4, k).unwrap();
    let b = small_data_check(&s, &ScaledForce(3.0), &c, 0.1, 4, k).unwrap();
    for (x, y) in a.lhs.iter().zip(&b.lhs) {
        assert!((y - 9.0 * x).abs() <= 1e-12 * y);
    }
    assert!(a.lhs.windows(2).all(|w| w[1] > w[0]));
    // Squared source norms over the two unit boxes at t = dt.
    let t: f64 = 0.1;
    let ff = (1.0 + t) * (1.0 + t) / 3.0 + 1.0 / 3.0;
    let fp = t * t / 3.0;
    let qp = 0.5 - (2.0 * t).sin() / (4.0 * t);
    let expected = 2.0 * (ff + fp + qp);
    assert!((a.c1[0] - expected).abs() < 1e-12 * expected, "{} vs {expected}", a.c1[0]);
    let small = small_data_check(&s, &ScaledForce(1e-6), &c, 0.1, 4, k).unwrap();
    assert!(small.satisfied);
    assert!(!b.satisfied);
}

#[test]
fn small_data_rejects_bad_constants() {
    let s = spaces(Family::Lower, 2);
    let c = ProblemCoefficients::unit();
    let k = EnergyConstants { s_f: 0.0, ..EnergyConstants::default() };
    assert!(small_data_check(&s, &ZeroSources, &c, 0.1, 3, k).is_err());
}

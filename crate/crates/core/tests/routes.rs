//! Cross-checks between the classical and quantum shift routes.

use nalgebra::Vector3;
use rrshift_core::dynamics::Trajectory;
use rrshift_core::potentials::{Axis, PotentialProfile, TransitionShape};
use rrshift_core::quadrature::{AngularSpec, QuadratureSpec};
use rrshift_core::scenario::Scenario;
use rrshift_core::shift::*;
use rrshift_core::variational::{jacobi_fields, retarded_perturbation};

const ALPHA: f64 = 1.0 / 137.0;

fn traj(name: &str) -> Trajectory {
    Scenario::standard(name).unwrap().trajectory().unwrap()
}

fn rel(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

#[test]
fn zero_acceleration_gives_zero_shift_on_every_route() {
    let prof = PotentialProfile::step(Axis::Time, [0.0; 4], 2.0, 1.0, TransitionShape::Smoothstep7);
    let t = Trajectory::new(&prof, 1.0, Vector3::new(0.2, 0.1, 0.6), 1e-12).unwrap();
    let q = QuadratureSpec::default();
    let shifts = [
        classical_shift_direct(&t, ALPHA).unwrap(),
        classical_shift_green(&t, ALPHA, &q, GreenMode::Swap).unwrap(),
        shift_quantum_closed(&t, ALPHA, &q).unwrap(),
        shift_quantum_quadrature(&t, ALPHA, &AngularSpec { n_polar: 8, n_azimuth: 16 }, &q).unwrap(),
    ];
    for s in shifts {
        assert!(s.norm() < 1e-15, "{s:?}");
    }
}

#[test]
fn collinear_shift_has_no_transverse_part() {
    let t = traj("collinear");
    let s = shift_quantum_closed(&t, ALPHA, &QuadratureSpec::default()).unwrap();
    assert!(s.x.abs().max(s.y.abs()) < 1e-10 * s.norm(), "{s:?}");
}

#[test]
fn integration_by_parts_form_equals_force_form() {
    for name in ["oblique", "static"] {
        let t = traj(name);
        let jf = jacobi_fields(&t).unwrap();
        let q = QuadratureSpec::default();
        let a = shift_quantum_closed_with(&t, &jf, ALPHA, &q).unwrap();
        let b = shift_quantum_force_form(&t, &jf, ALPHA, &q).unwrap();
        assert!(rel(&a, &b) < 1e-8, "{name}: {a:?} vs {b:?}");
    }
}

#[test]
fn green_route_swap_and_fresh_modes_agree() {
    let t = traj("oblique");
    let q = QuadratureSpec { rel_tol: 1e-10, ..QuadratureSpec::default() };
    let a = classical_shift_green(&t, ALPHA, &q, GreenMode::Swap).unwrap();
    let b = classical_shift_green(&t, ALPHA, &q, GreenMode::Fresh).unwrap();
    assert!(rel(&a, &b) < 1e-7, "{a:?} vs {b:?}");
}

#[test]
fn green_route_matches_retarded_perturbation() {
    for name in ["oblique", "static"] {
        let t = traj(name);
        let g = classical_shift_green(&t, ALPHA, &QuadratureSpec::default(), GreenMode::Swap).unwrap();
        let d = retarded_perturbation(&t, ALPHA).unwrap().shift();
        assert!(rel(&g, &d) < 1e-6, "{name}: {g:?} vs {d:?}");
    }
}

#[test]
fn angular_quadrature_route_matches_closed_form_and_converges() {
    let t = traj("static");
    let q = QuadratureSpec::default();
    let closed = shift_quantum_closed(&t, ALPHA, &q).unwrap();
    let base = shift_quantum_quadrature(&t, ALPHA, &AngularSpec { n_polar: 64, n_azimuth: 128 }, &q).unwrap();
    let fine = shift_quantum_quadrature(&t, ALPHA, &AngularSpec { n_polar: 128, n_azimuth: 256 }, &q).unwrap();
    assert!(rel(&closed, &base) < 1e-6, "{closed:?} vs {base:?}");
    assert!(rel(&base, &fine) < 1e-8, "{base:?} vs {fine:?}");
}

#[test]
fn direct_route_is_linear_in_alpha() {
    let t = traj("oblique");
    let a = classical_shift_direct(&t, ALPHA).unwrap();
    let b = classical_shift_direct(&t, 3.0 * ALPHA).unwrap();
    assert!(rel(&(a * 3.0), &b) < 1e-10, "{a:?} vs {b:?}");
}

#[test]
fn every_standard_scenario_passes() {
    for name in Scenario::standard_names() {
        let sc = Scenario::standard(name).unwrap();
        let r = compare_routes(&sc.trajectory().unwrap(), sc.alpha_c(), &sc.route_settings(Route::standard(), false));
        assert!(r.pass, "{name}: max residual {}", r.max_residual);
        if name == "collinear" {
            assert!(r.max_residual < 1e-5);
        }
    }
}

#[test]
fn zero_coupling_passes_with_zero_shifts() {
    let sc = Scenario::standard("oblique").unwrap();
    let r = compare_routes(&sc.trajectory().unwrap(), 0.0, &sc.route_settings(Route::standard(), false));
    assert!(r.pass);
    for route in Route::standard() {
        assert_eq!(r.get(route).unwrap(), Vector3::zeros());
    }
}

#[test]
fn residuals_are_the_stated_differences() {
    let sc = Scenario::standard("static").unwrap();
    let r = compare_routes(&sc.trajectory().unwrap(), sc.alpha_c(), &sc.route_settings(Route::standard(), false));
    let shifts: Vec<_> = r.routes.iter().map(|o| Vector3::from(o.shift)).collect();
    let scale = r.get(Route::Green).unwrap().norm();
    for i in 0..shifts.len() {
        for j in 0..shifts.len() {
            let expect = (shifts[i] - shifts[j]).norm() / scale;
            assert!((r.residuals[i][j] - expect).abs() <= 1e-12 * expect.max(1e-300));
        }
    }
}

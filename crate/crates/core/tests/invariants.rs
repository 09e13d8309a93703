//! Property-based invariants.

use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;
use rrshift_core::dynamics::Trajectory;
use rrshift_core::potentials::{Axis, PotentialProfile, TransitionShape};
use rrshift_core::quadrature::QuadratureSpec;
use rrshift_core::semiclassical::CutoffWindow;
use rrshift_core::shift::*;

fn velocity(max: f64) -> impl Strategy<Value = Vector3<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..max)
        .prop_filter("non-zero direction", |(x, y, z, _)| x * x + y * y + z * z > 1e-6)
        .prop_map(|(x, y, z, s)| Vector3::new(x, y, z).normalize() * s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn angular_tensors_are_symmetric(v in velocity(0.95)) {
        let a = angular_integrals(&v).unwrap();
        let s2 = a.i2.amax();
        prop_assert!((a.i2 - a.i2.transpose()).amax() <= 1e-14 * s2);
        let s3 = a.i3.iter().map(|m| m.amax()).fold(0.0, f64::max).max(a.i0);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let x = a.i3[k][(i, j)];
                    for y in [a.i3[k][(j, i)], a.i3[i][(j, k)], a.i3[j][(k, i)]] {
                        prop_assert!((x - y).abs() <= 1e-14 * s3);
                    }
                }
            }
        }
    }

    #[test]
    fn angular_integrals_rotate_covariantly(v in velocity(0.9), ax in velocity(1.0), angle in 0.0..2.0 * PI) {
        prop_assume!(ax.norm() > 1e-3);
        let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(ax), angle);
        let m = r.matrix();
        let a = angular_integrals(&v).unwrap();
        let b = angular_integrals(&(m * v)).unwrap();
        prop_assert!((a.i0 - b.i0).abs() <= 1e-13 * a.i0);
        prop_assert!((m * a.i1 - b.i1).amax() <= 1e-12 * a.i0.max(a.i1.amax()));
        prop_assert!((m * a.i2 * m.transpose() - b.i2).amax() <= 1e-12 * a.i2.amax());
    }

    #[test]
    fn scalar_moments_match_one_dimensional_integrals(v in velocity(0.95)) {
        let a = angular_integrals(&v).unwrap();
        let (v2, g2) = (v.norm_squared(), 1.0 / (1.0 - v.norm_squared()));
        // ∫dΩ (1-n·v)^-2 and ∫dΩ (1-n·v)^-4, reduced to ∫dc over cos θ.
        prop_assert!((a.i0 - 4.0 * PI * g2).abs() <= 1e-13 * a.i0);
        let tr = 4.0 * PI * g2 * g2 * g2 * (1.0 + v2 / 3.0);
        prop_assert!((a.i2.trace() - tr).abs() <= 1e-12 * tr);
    }

    #[test]
    fn superluminal_velocities_are_rejected(s in 1.0..3.0f64) {
        prop_assert!(angular_integrals(&Vector3::new(0.0, s, 0.0)).is_err());
    }

    #[test]
    fn window_is_a_smooth_plateau(on in -10.0..0.0f64, len in 0.1..5.0f64, w in 0.05..2.0f64, u in -0.5..1.5f64) {
        let win = CutoffWindow::new(on, on + len, w).unwrap();
        let (lo, hi) = win.support();
        let xi = lo + u * (hi - lo);
        let c = win.value(xi);
        prop_assert!((0.0..=1.0).contains(&c));
        if xi >= on && xi <= on + len {
            prop_assert_eq!(c, 1.0);
        }
        if xi <= lo || xi >= hi {
            prop_assert_eq!(c, 0.0);
            prop_assert_eq!(win.derivative(xi), 0.0);
        }
        let h = 1e-6 * w;
        let fd = (win.value(xi + h) - win.value(xi - h)) / (2.0 * h);
        prop_assert!((fd - win.derivative(xi)).abs() <= 1e-6 / w);
        // The symmetric tapers together contribute one width of area.
        prop_assert!((win.transform(0.0).re - (len + w)).abs() <= 1e-12 * (len + w));
    }

    #[test]
    fn shifts_are_linear_in_alpha(vz in 0.05..0.5f64, vx in -0.4..0.4f64, pz in 0.2..1.0f64, scale in 0.1..10.0f64) {
        let prof = PotentialProfile::step(Axis::Time, [0.0, vx, 0.0, vz], 2.0, 1.0, TransitionShape::Smoothstep7);
        let t = Trajectory::new(&prof, 1.0, Vector3::new(0.0, 0.0, pz), 1e-11).unwrap();
        let q = QuadratureSpec::default();
        let a = 1.0 / 137.0;
        for (x, y) in [
            (classical_shift_direct(&t, a).unwrap(), classical_shift_direct(&t, a * scale).unwrap()),
            (shift_quantum_closed(&t, a, &q).unwrap(), shift_quantum_closed(&t, a * scale, &q).unwrap()),
        ] {
            prop_assert!((x * scale - y).norm() <= 1e-10 * y.norm());
        }
    }

    #[test]
    fn mirrored_transverse_potential_mirrors_the_shift(vz in 0.05..0.5f64, vx in 0.05..0.4f64, pz in 0.2..1.0f64) {
        let shift = |vx: f64| {
            let prof = PotentialProfile::step(Axis::Time, [0.0, vx, 0.0, vz], 2.0, 1.0, TransitionShape::Smoothstep7);
            let t = Trajectory::new(&prof, 1.0, Vector3::new(0.0, 0.0, pz), 1e-12).unwrap();
            shift_quantum_closed(&t, 1.0 / 137.0, &QuadratureSpec::default()).unwrap()
        };
        let (a, b) = (shift(vx), shift(-vx));
        let tol = 1e-9 * a.norm();
        prop_assert!((a.x + b.x).abs() <= tol);
        prop_assert!((a.y - b.y).abs() <= tol);
        prop_assert!((a.z - b.z).abs() <= tol);
    }

    #[test]
    fn relative_residual_is_zero_only_for_equal_shifts(x in velocity(1.0), d in velocity(1e-3)) {
        let same = relative_residual(&[x, x, x], x.norm(), 1e-16);
        prop_assert_eq!(same, 0.0);
        let r = relative_residual(&[x, x + d], x.norm().max(1e-3), 1e-16);
        prop_assert!((r - d.norm() / x.norm().max(1e-3)).abs() <= 1e-12);
    }
}

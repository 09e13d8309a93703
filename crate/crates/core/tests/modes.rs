//! Finite-ℏ mode functions against their semiclassical limits.

use rrshift_core::scenario::Scenario;
use rrshift_core::semiclassical::*;

const HBARS: [f64; 3] = [0.1, 0.05, 0.025];

fn modes(hbar: f64, k: f64, n: &nalgebra::Vector3<f64>) -> (ModeFunction, ModeFunction) {
    let sc = Scenario::standard("oblique").unwrap();
    let traj = sc.trajectory().unwrap();
    let w = sc.window(&traj).unwrap();
    let grid = ModeGrid::covering(&traj, &w, hbar, 32.0);
    let p = sc.p_final();
    let initial = solve_mode_function(&sc.profile, sc.mass, p, hbar, &grid).unwrap();
    let fin = solve_mode_function(&sc.profile, sc.mass, p - n * (hbar * k), hbar, &grid).unwrap();
    (fin, initial)
}

#[test]
fn wkb_amplitude_error_is_second_order_in_hbar() {
    let sc = Scenario::standard("oblique").unwrap();
    let traj = sc.trajectory().unwrap();
    let dev: Vec<f64> = HBARS
        .iter()
        .map(|&h| {
            let (_, m) = modes(h, 0.0, &nalgebra::Vector3::z());
            wkb_deviation(&m, &sc.profile, traj.t1, traj.t2)
        })
        .collect();
    for w in dev.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 4.0).abs() <= 1.0, "deviations {dev:?}");
    }
}

#[test]
fn wronskian_holds_for_every_hbar() {
    for &h in &HBARS {
        let (_, m) = modes(h, 0.0, &nalgebra::Vector3::z());
        let w0 = 2.0 * m.energy();
        for j in (0..m.grid.len).step_by(997) {
            assert!((m.wronskian(j) - w0).abs() <= 1e-8 * w0);
        }
    }
}

#[test]
fn phase_product_drift_is_first_order_in_hbar() {
    let sc = Scenario::standard("oblique").unwrap();
    let traj = sc.trajectory().unwrap();
    let n = nalgebra::Vector3::new(0.6, 0.0, 0.8);
    let k = 2.0 / traj.duration();
    let drift: Vec<f64> = HBARS
        .iter()
        .map(|&h| {
            let (f, i) = modes(h, k, &n);
            phase_product_drift(&f, &i, k, &n, &traj)
        })
        .collect();
    for w in drift.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..=2.5).contains(&ratio), "drifts {drift:?}");
    }
}

#[test]
fn quantum_amplitude_approaches_classical() {
    let sc = Scenario::standard("oblique").unwrap();
    let traj = sc.trajectory().unwrap();
    let w = sc.window(&traj).unwrap();
    let n = nalgebra::Vector3::new(0.0, 0.6, 0.8);
    let k = 3.0 / traj.duration();
    let cl = amplitude_classical(&traj, k, &n, &w, sc.charge).unwrap();
    let err: Vec<f64> = HBARS
        .iter()
        .map(|&h| {
            let (f, i) = modes(h, k, &n);
            let q = amplitude_quantum(&f, &i, k, &n, &sc.profile, &traj, &w, sc.charge).unwrap();
            q.a.iter().zip(&cl.a).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
        })
        .collect();
    assert!(err[0] > err[1] && err[1] > err[2], "{err:?}");
}

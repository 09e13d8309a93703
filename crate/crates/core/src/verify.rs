//! Measurements behind the verification suite.
//!
//! Each function returns raw numbers (residuals, ratios); [`run_suite`]
//! compares them with the acceptance thresholds.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::lorentz_dirac::{coordinate_force, four_force, four_velocity, minkowski};
use crate::potentials::{Axis, PotentialProfile, TransitionShape};
use crate::quadrature::{AngularSpec, QuadratureSpec};
use crate::scenario::Scenario;
use crate::semiclassical::{
    amplitude_classical, amplitude_quantum, emission_probability_reduced, larmor_energy, radiated_energy,
    shift_from_amplitudes, solve_mode_function, AmplitudeSettings, ModeGrid,
};
use crate::shift::{angular_integrals, angular_integrals_numeric, compare_routes, shift_quantum_closed, Route, RouteSettings};
use crate::variational::{jacobi_fields, kick_matrix, propagate_deviation, symplectic_product};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Fast,
    Full,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Suite> {
        match s {
            "fast" => Some(Suite::Fast),
            "full" => Some(Suite::Full),
            _ => None,
        }
    }
}

/// Max relative route residual for a scenario. The full suite tightens the
/// integrator and quadrature tolerances by two orders of magnitude.
pub fn route_residual(sc: &Scenario, suite: Suite) -> Result<f64> {
    let mut sc = sc.clone();
    if suite == Suite::Full {
        sc.tolerances.integrator = 1e-13;
        sc.quadrature = QuadratureSpec { rel_tol: 1e-13, abs_tol: 1e-18, max_subdivisions: 4000 };
    }
    let traj = sc.trajectory()?;
    let settings = RouteSettings { threshold: f64::INFINITY, timings: false, ..sc.route_settings(Route::standard(), false) };
    let r = compare_routes(&traj, sc.alpha_c(), &settings);
    for o in &r.routes {
        if let Some(e) = &o.error {
            return Err(Error::Quadrature(format!("route {} failed: {e}", o.route.name())));
        }
    }
    Ok(r.max_residual)
}

fn random_velocity(rng: &mut ChaCha8Rng, vmax: f64) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if v.norm() <= 1.0 {
            return v * vmax;
        }
    }
}

fn rel_diff(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    (a - b).amax() / a.amax().max(b.amax()).max(1e-300)
}

/// Worst relative error of the closed-form angular integrals against
/// 64×128 quadrature over `count` random velocities with `|v| ≤ 0.9`.
pub fn angular_closed_vs_quadrature(seed: u64, count: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let v = random_velocity(&mut rng, 0.9);
        let a = angular_integrals(&v)?;
        let b = angular_integrals_numeric(&v, &AngularSpec { n_polar: 64, n_azimuth: 128 });
        worst = worst.max((a.i0 - b.i0).abs() / a.i0);
        worst = worst.max((a.i1 - b.i1).amax() / a.i1.amax().max(b.i1.amax()).max(1e-300));
        worst = worst.max(rel_diff(&a.i2, &b.i2));
        let s3 = a.i3.iter().map(|m| m.amax()).fold(0.0, f64::max);
        for k in 0..3 {
            worst = worst.max((a.i3[k] - b.i3[k]).amax() / s3.max(1e-300));
        }
    }
    Ok(worst)
}

/// Worst relative error of `I1 = ½∂I0`, `I2 = ⅓∂I1`, `I3 = ¼∂I2` by central
/// differences in `v`.
pub fn angular_ladder(seed: u64, count: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let v = random_velocity(&mut rng, 0.9);
        let base = angular_integrals(&v)?;
        let mut d1 = Vector3::zeros();
        let mut d2 = Matrix3::zeros();
        let mut d3 = [Matrix3::zeros(); 3];
        for j in 0..3 {
            let mut vp = v;
            let mut vm = v;
            vp[j] += h;
            vm[j] -= h;
            let (p, m) = (angular_integrals(&vp)?, angular_integrals(&vm)?);
            d1[j] = (p.i0 - m.i0) / (2.0 * h) / 2.0;
            for i in 0..3 {
                d2[(i, j)] = (p.i1[i] - m.i1[i]) / (2.0 * h) / 3.0;
                for k in 0..3 {
                    // ∂_j I2^{ik} / 4 = I3^{ikj}
                    d3[j][(i, k)] = (p.i2[(i, k)] - m.i2[(i, k)]) / (2.0 * h) / 4.0;
                }
            }
        }
        worst = worst.max((d1 - base.i1).amax() / base.i1.amax().max(base.i0));
        worst = worst.max(rel_diff(&base.i2, &d2));
        let s3 = base.i3.iter().map(|m| m.amax()).fold(0.0, f64::max).max(base.i0);
        for k in 0..3 {
            worst = worst.max((d3[k] - base.i3[k]).amax() / s3);
        }
    }
    Ok(worst)
}

/// `(constancy, swap)`: drift of every pairwise symplectic product among the
/// three Jacobi fields and three random deviations, relative to the pair's
/// scale; and the swap identity on a 5×5 grid of kick/response times.
pub fn symplectic_checks(traj: &Trajectory, seed: u64) -> Result<(f64, f64)> {
    let jf = jacobi_fields(traj)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut paths = Vec::new();
    for _ in 0..3 {
        let dx = random_velocity(&mut rng, 1.0);
        let dp = random_velocity(&mut rng, 1.0);
        paths.push(propagate_deviation(traj, 0.0, dx, dp, traj.t_min)?);
    }
    let fields = |t: f64| -> Result<Vec<(Vector3<f64>, Vector3<f64>)>> {
        let (x, p) = jf.at(t)?;
        let mut out: Vec<_> = (0..3).map(|i| (x.column(i).into_owned(), p.column(i).into_owned())).collect();
        out.extend(paths.iter().map(|d| d.at(t)));
        Ok(out)
    };
    let f0 = fields(0.0)?;
    let n = f0.len();
    let mut scale = vec![vec![0.0f64; n]; n];
    let mut drift = vec![vec![0.0f64; n]; n];
    for s in 0..=100 {
        let t = traj.t_min * s as f64 / 100.0;
        let f = fields(t)?;
        for a in 0..n {
            for b in 0..n {
                let sc = f[a].0.norm() * f[b].1.norm() + f[a].1.norm() * f[b].0.norm();
                scale[a][b] = scale[a][b].max(sc);
                drift[a][b] = drift[a][b].max((symplectic_product(f[a], f[b]) - symplectic_product(f0[a], f0[b])).abs());
            }
        }
    }
    let mut constancy: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                constancy = constancy.max(drift[a][b] / scale[a][b]);
            }
        }
    }
    let times: Vec<f64> = (0..5).map(|i| traj.t_min * (0.05 + 0.9 * i as f64 / 4.0)).collect();
    let (mut swap, mut kscale): (f64, f64) = (0.0, 0.0);
    for &t0 in &times {
        for &t in &times {
            let (k1, _) = kick_matrix(traj, t0, t)?;
            let (k2, _) = kick_matrix(traj, t, t0)?;
            swap = swap.max((k1 + k2.transpose()).amax());
            kscale = kscale.max(k1.amax());
        }
    }
    Ok((constancy, swap / kscale))
}

/// Jacobi fields against central differences of the trajectory family
/// `p ± ε e_i`, on 50 times; relative to the largest field magnitude.
pub fn jacobi_vs_finite_difference(traj: &Trajectory, eps: f64) -> Result<f64> {
    let jf = jacobi_fields(traj)?;
    let mut fam = Vec::new();
    for i in 0..3 {
        for s in [1.0, -1.0] {
            let mut p = traj.p_final;
            p[i] += s * eps;
            fam.push(Trajectory::new(&traj.profile, traj.mass, p, traj.tol)?);
        }
    }
    let lo = fam.iter().map(|f| f.t_min).fold(traj.t_min, f64::max);
    let (mut worst, mut scale): (f64, f64) = (0.0, 0.0);
    for s in 0..50 {
        let t = lo * (s as f64 + 0.5) / 50.0;
        let (x, _) = jf.at(t)?;
        scale = scale.max(x.amax());
        for i in 0..3 {
            let d = (fam[2 * i].kinematics(t)?.x - fam[2 * i + 1].kinematics(t)?.x) / (2.0 * eps);
            worst = worst.max((d - x.column(i)).amax());
        }
    }
    Ok(worst / scale)
}

/// `(γ𝓕 vs F_spatial, u·F)` on a 200-point grid, relative to `|F_LD|`.
pub fn lorentz_dirac_consistency(traj: &Trajectory) -> Result<(f64, f64)> {
    let (mut a, mut b, mut scale): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..200 {
        let t = traj.t1 + (traj.t2 - traj.t1) * i as f64 / 199.0;
        let k = traj.kinematics(t)?;
        let f4 = four_force(&k, 1.0);
        let f3 = coordinate_force(&k, 1.0) * k.gamma;
        scale = scale.max(f4.amax());
        a = a.max((Vector3::new(f4[1], f4[2], f4[3]) - f3).amax());
        b = b.max(minkowski(&four_velocity(&k), &f4).abs() / k.gamma);
    }
    Ok((a / scale.max(1e-300), b / scale.max(1e-300)))
}

/// At the instant a decelerated charge comes to rest, `𝓕 = (2α/3) ȧ`.
pub fn lorentz_dirac_rest_limit() -> Result<f64> {
    let prof = PotentialProfile::step(Axis::Time, [0.0, 0.0, 0.0, 0.5], 2.0, 1.0, TransitionShape::Smoothstep7);
    let traj = Trajectory::new(&prof, 1.0, Vector3::new(0.0, 0.0, 0.1), 1e-13)?;
    let (mut lo, mut hi) = (traj.t1, traj.t2);
    let vz = |t: f64| traj.kinematics(t).map(|k| k.v.z);
    if vz(lo)? * vz(hi)? > 0.0 {
        return Err(Error::Config("velocity does not change sign".into()));
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if vz(m)? * vz(lo)? > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    let k = traj.kinematics(0.5 * (lo + hi))?;
    let alpha = 1.0 / 137.0;
    let expect = k.jerk * (2.0 * alpha / 3.0);
    Ok((coordinate_force(&k, alpha) - expect).amax() / expect.amax())
}

/// `(E - baseline - Larmor)/Larmor`.
pub fn energy_vs_larmor(sc: &Scenario, settings: &AmplitudeSettings) -> Result<f64> {
    let traj = sc.trajectory()?;
    let w = settings.window(&traj)?;
    let e = radiated_energy(&traj, &w, sc.alpha_c(), settings)?;
    let l = larmor_energy(&traj, sc.alpha_c(), &QuadratureSpec::default())?;
    Ok(((e.net - l) / l).abs())
}

/// Wave numbers and directions sampled for the `ℏ → 0` study:
/// `k_j = j/duration` and the 5-point Fibonacci sphere.
pub fn convergence_samples(traj: &Trajectory) -> Vec<(f64, Vector3<f64>)> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..5)
        .map(|j| {
            let z = 1.0 - (2.0 * j as f64 + 1.0) / 5.0;
            let r = (1.0 - z * z).sqrt();
            let ph = j as f64 * golden;
            ((j + 1) as f64 / traj.duration(), Vector3::new(r * ph.cos(), r * ph.sin(), z))
        })
        .collect()
}

/// Quantum-vs-classical amplitude errors under `ℏ`-halving.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub hbars: Vec<f64>,
    pub samples: Vec<(f64, [f64; 3])>,
    /// `errors[s][h][μ] = |𝒜_q^μ - 𝒜_cl^μ|`.
    pub errors: Vec<Vec<[f64; 4]>>,
    /// `ratios[s][h][μ] = errors[s][h][μ] / errors[s][h+1][μ]`; NaN for
    /// components that vanish identically.
    pub ratios: Vec<Vec<[f64; 4]>>,
    pub min_ratio: f64,
}

pub fn hbar_convergence(sc: &Scenario, hbars: &[f64]) -> Result<ConvergenceStudy> {
    let traj = sc.trajectory()?;
    let window = sc.window(&traj)?;
    let samples = convergence_samples(&traj);
    let e = sc.charge;
    let p = traj.p_final;
    let mut errors = vec![Vec::new(); samples.len()];
    let mut zero = vec![[false; 4]; samples.len()];
    for (s, &(k, n)) in samples.iter().enumerate() {
        let cl = amplitude_classical(&traj, k, &n, &window, e)?;
        let big = cl.a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for mu in 0..4 {
            zero[s][mu] = cl.a[mu].norm() <= 1e-9 * big;
        }
    }
    for &h in hbars {
        let grid = ModeGrid::covering(&traj, &window, h, 32.0);
        let initial = solve_mode_function(&sc.profile, sc.mass, p, h, &grid)?;
        for (s, &(k, n)) in samples.iter().enumerate() {
            let fin = solve_mode_function(&sc.profile, sc.mass, p - n * (h * k), h, &grid)?;
            let q = amplitude_quantum(&fin, &initial, k, &n, &sc.profile, &traj, &window, e)?;
            let cl = amplitude_classical(&traj, k, &n, &window, e)?;
            let mut err = [0.0; 4];
            for mu in 0..4 {
                err[mu] = (q.a[mu] - cl.a[mu]).norm();
            }
            errors[s].push(err);
        }
    }
    let mut min_ratio = f64::INFINITY;
    let ratios: Vec<Vec<[f64; 4]>> = errors
        .iter()
        .enumerate()
        .map(|(s, e)| {
            e.windows(2)
                .map(|w| {
                    let mut r = [f64::NAN; 4];
                    for mu in 0..4 {
                        if !zero[s][mu] {
                            r[mu] = w[0][mu] / w[1][mu];
                            min_ratio = min_ratio.min(r[mu]);
                        }
                    }
                    r
                })
                .collect()
        })
        .collect();
    Ok(ConvergenceStudy {
        hbars: hbars.to_vec(),
        samples: samples.iter().map(|(k, n)| (*k, [n.x, n.y, n.z])).collect(),
        errors,
        ratios,
        min_ratio,
    })
}

/// `(doubling change, disagreement with the closed form)` for the amplitude
/// route, both relative.
pub fn amplitude_window_checks(sc: &Scenario, settings: &AmplitudeSettings) -> Result<(f64, f64)> {
    let traj = sc.trajectory()?;
    let alpha = sc.alpha_c();
    let w = settings.window_width.unwrap_or((0.5 * traj.duration()).max(0.05));
    let a1 = shift_from_amplitudes(&traj, alpha, settings)?.shift;
    let wide = AmplitudeSettings { window_width: Some(2.0 * w), plateau_padding: Some(2.0 * w), ..*settings };
    let a2 = shift_from_amplitudes(&traj, alpha, &wide)?.shift;
    let closed = shift_quantum_closed(&traj, alpha, &QuadratureSpec::default())?;
    Ok(((a2 - a1).norm() / a1.norm(), (a1 - closed).norm() / closed.norm()))
}

/// `(|double - single|/single, single)` for the reduced probability.
pub fn probability_parseval(sc: &Scenario, settings: &AmplitudeSettings) -> Result<(f64, f64)> {
    let traj = sc.trajectory()?;
    let w = settings.window(&traj)?;
    let p = emission_probability_reduced(&traj, &w, settings)?;
    Ok(((p.double_form - p.amplitude_form).abs() / p.amplitude_form.abs(), p.amplitude_form))
}

/// One line of the verification summary.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    /// Measured value; `NaN` when the measurement itself failed.
    pub value: f64,
    pub threshold: f64,
    /// `true` if the value must be at least the threshold, else below it.
    pub at_least: bool,
    pub pass: bool,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn check(criterion: u8, name: &str, threshold: f64, at_least: bool, f: impl FnOnce() -> Result<f64>) -> Check {
    let start = Instant::now();
    let (value, error) = match f() {
        Ok(v) => (v, None),
        Err(e) => (f64::NAN, Some(e.to_string())),
    };
    let pass = if at_least { value >= threshold } else { value < threshold };
    Check { criterion, name: name.into(), value, threshold, at_least, pass, seconds: start.elapsed().as_secs_f64(), error }
}

/// Two checks sharing one measurement.
fn check_pair(
    criterion: u8,
    names: [&str; 2],
    thresholds: [f64; 2],
    f: impl FnOnce() -> Result<(f64, f64)>,
) -> [Check; 2] {
    let start = Instant::now();
    let r = f();
    let seconds = start.elapsed().as_secs_f64();
    let one = |i: usize| {
        let mut c = check(criterion, names[i], thresholds[i], false, || match &r {
            Ok((a, b)) => Ok(if i == 0 { *a } else { *b }),
            Err(e) => Err(Error::Config(e.to_string())),
        });
        c.seconds = seconds;
        if let Err(e) = &r {
            c.error = Some(e.to_string());
        }
        c
    };
    [one(0), one(1)]
}

fn standard(name: &str) -> Scenario {
    Scenario::standard(name).expect("standard scenario")
}

/// Run every check of a suite. The fast suite skips the amplitude-route and
/// finite-`ℏ` checks.
pub fn run_suite(suite: Suite) -> Vec<Check> {
    let mut out = Vec::new();
    let route_tol = if suite == Suite::Full { 1e-5 } else { 1e-4 };
    for name in Scenario::standard_names() {
        out.push(check(1, &format!("route residual, {name}"), route_tol, false, || route_residual(&standard(name), suite)));
    }
    out.push(check(2, "angular closed forms vs 64x128 quadrature", 1e-10, false, || angular_closed_vs_quadrature(1, 50)));
    out.push(check(2, "angular derivative ladder", 1e-7, false, || angular_ladder(2, 20)));
    for name in ["oblique", "static"] {
        out.extend(check_pair(
            3,
            [&format!("symplectic product constancy, {name}"), &format!("swap identity 5x5, {name}")],
            [1e-9, 1e-7],
            || symplectic_checks(&standard(name).trajectory()?, 3),
        ));
        out.push(check(4, &format!("Jacobi fields vs finite differences, {name}"), 1e-5, false, || {
            jacobi_vs_finite_difference(&standard(name).trajectory()?, 1e-5)
        }));
    }
    for name in Scenario::standard_names() {
        out.extend(check_pair(
            5,
            [&format!("gamma F = F_LD spatial, {name}"), &format!("u . F_LD = 0, {name}")],
            [1e-8, 1e-8],
            || lorentz_dirac_consistency(&standard(name).trajectory()?),
        ));
    }
    out.push(check(5, "rest-frame limit (2a/3) jerk", 1e-8, false, lorentz_dirac_rest_limit));
    let amp = AmplitudeSettings::default();
    for name in Scenario::standard_names() {
        out.push(check(6, &format!("radiated energy vs Larmor, {name}"), 1e-3, false, || energy_vs_larmor(&standard(name), &amp)));
    }
    if suite == Suite::Full {
        out.push(check(7, "hbar convergence ratio, oblique", 1.7, true, || {
            Ok(hbar_convergence(&standard("oblique"), &[0.1, 0.05, 0.025])?.min_ratio)
        }));
        for name in Scenario::standard_names() {
            out.extend(check_pair(
                8,
                [&format!("taper doubling, {name}"), &format!("amplitude route vs closed form, {name}")],
                [1e-3, 1e-3],
                || amplitude_window_checks(&standard(name), &amp),
            ));
        }
    }
    let small = AmplitudeSettings { angular: AngularSpec { n_polar: 4, n_azimuth: 8 }, ..amp };
    for name in ["oblique", "static"] {
        out.push(check(9, &format!("probability double vs single form, {name}"), 1e-8, false, || {
            Ok(probability_parseval(&standard(name), &small)?.0)
        }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!(Suite::parse("fast"), Some(Suite::Fast));
        assert_eq!(Suite::parse("full"), Some(Suite::Full));
        assert_eq!(Suite::parse("quick"), None);
    }

    #[test]
    fn failed_measurement_fails_the_check() {
        let c = check(0, "x", 1.0, false, || Err(Error::Config("boom".into())));
        assert!(!c.pass && c.value.is_nan() && c.error.is_some());
    }
}

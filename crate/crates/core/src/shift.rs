//! The radiation-reaction position shift at `t = 0`, by several routes.
//!
//! * **direct** — integrate the linearised equations with the Lorentz–Dirac
//!   force switched on before the acceleration.
//! * **green** — `δx^i = ∫ 𝓕^j(t) Δx^i_(j)(0; t) dt`, with the kick response
//!   either taken from the Jacobi fields through the swap identity
//!   `Δx^i_(j)(0; t) = -Δx^j_(i)(t; 0)` or re-integrated at every node.
//! * **quantum (closed)** — the `ℏ → 0` emission formula after the angular
//!   integrals are done analytically:
//!   `δx^i = (2α/3) ∫ [B·J̇_(i) + C·J_(i)] dt`.
//! * **quantum (quadrature)** — the same formula with the photon directions
//!   integrated numerically:
//!
//! ```text
//! δx^i = -(α/4π) ∫dt ∫dΩ [ d²t/dξ² · d/dt(∂t/∂pⁱ)_ξ - d²xᵏ/dξ² · d/dt(∂xᵏ/∂pⁱ)_ξ ]
//! ```
//!
//! with `ξ = t - n·x` the light-front time along the photon direction `n`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::lorentz_dirac::{by_parts_coefficients, coordinate_force};
use crate::quadrature::{integrate_adaptive, AngularSpec, QuadratureSpec, SphereRule};
use crate::variational::{jacobi_fields, kick_matrix, retarded_perturbation, JacobiFields};

/// How the Green's-function route obtains `Δx(0; t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GreenMode {
    /// From the Jacobi fields via the swap identity.
    #[default]
    Swap,
    /// A fresh kick-matrix integration from each quadrature node to `t = 0`.
    Fresh,
}

/// Shift from the retarded perturbation.
pub fn classical_shift_direct(traj: &Trajectory, alpha_c: f64) -> Result<Vector3<f64>> {
    Ok(retarded_perturbation(traj, alpha_c)?.shift())
}

fn accel_interval(traj: &Trajectory) -> [f64; 2] {
    [traj.t1, traj.t2]
}

/// Shift from the Green's-function integral.
pub fn classical_shift_green(traj: &Trajectory, alpha_c: f64, quad: &QuadratureSpec, mode: GreenMode) -> Result<Vector3<f64>> {
    let out = match mode {
        GreenMode::Swap => {
            let jf = jacobi_fields(traj)?;
            integrate_adaptive(
                |t, o| {
                    let f = coordinate_force(&traj.kinematics(t).unwrap(), 1.0);
                    let (x, _) = jf.at(t).unwrap();
                    o.copy_from_slice((-(x.transpose() * f)).as_slice());
                },
                &accel_interval(traj),
                3,
                quad,
            )?
        }
        GreenMode::Fresh => {
            let mut failure: Option<Error> = None;
            let v = integrate_adaptive(
                |t, o| {
                    let f = coordinate_force(&traj.kinematics(t).unwrap(), 1.0);
                    match kick_matrix(traj, t, 0.0) {
                        Ok((k, _)) => o.copy_from_slice((k * f).as_slice()),
                        Err(e) => {
                            failure.get_or_insert(e);
                            o.fill(0.0);
                        }
                    }
                },
                &accel_interval(traj),
                3,
                quad,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            v
        }
    };
    Ok(Vector3::from_column_slice(&out) * alpha_c)
}

/// Closed-form `ℏ → 0` shift (integrated-by-parts form).
pub fn shift_quantum_closed(traj: &Trajectory, alpha_c: f64, quad: &QuadratureSpec) -> Result<Vector3<f64>> {
    let jf = jacobi_fields(traj)?;
    shift_quantum_closed_with(traj, &jf, alpha_c, quad)
}

pub fn shift_quantum_closed_with(traj: &Trajectory, jf: &JacobiFields, alpha_c: f64, quad: &QuadratureSpec) -> Result<Vector3<f64>> {
    let out = integrate_adaptive(
        |t, o| {
            let k = traj.kinematics(t).unwrap();
            let (b, c) = by_parts_coefficients(&k);
            let (x, xd) = jf.with_rate(t).unwrap();
            o.copy_from_slice((xd.transpose() * b + x.transpose() * c).as_slice());
        },
        &accel_interval(traj),
        3,
        quad,
    )?;
    Ok(Vector3::from_column_slice(&out) * (2.0 * alpha_c / 3.0))
}

/// The same shift before integrating by parts: `-∫ 𝓕·J_(i) dt`.
pub fn shift_quantum_force_form(traj: &Trajectory, jf: &JacobiFields, alpha_c: f64, quad: &QuadratureSpec) -> Result<Vector3<f64>> {
    let out = integrate_adaptive(
        |t, o| {
            let f = coordinate_force(&traj.kinematics(t).unwrap(), 1.0);
            let (x, _) = jf.at(t).unwrap();
            o.copy_from_slice((-(x.transpose() * f)).as_slice());
        },
        &accel_interval(traj),
        3,
        quad,
    )?;
    Ok(Vector3::from_column_slice(&out) * alpha_c)
}

/// Angular integrand of the quadrature route for one direction: returns the
/// bracket for each of the three kick directions.
pub fn light_front_integrand(
    n: &Vector3<f64>,
    v: &Vector3<f64>,
    a: &Vector3<f64>,
    j: &Matrix3<f64>,
    jd: &Matrix3<f64>,
) -> Vector3<f64> {
    let xid = 1.0 - n.dot(v);
    let na = n.dot(a);
    let inv = 1.0 / xid;
    let inv3 = inv * inv * inv;
    let d2t = na * inv3;
    let d2x = (a * xid + v * na) * inv3;
    let nj = j.transpose() * n;
    let njd = jd.transpose() * n;
    let mut out = Vector3::zeros();
    for i in 0..3 {
        let dt = njd[i] * inv + nj[i] * na * inv * inv;
        let jdi = jd.column(i);
        let dx = jdi + a * (nj[i] * inv) + v * (njd[i] * inv + nj[i] * na * inv * inv);
        out[i] = d2t * dt - d2x.dot(&dx);
    }
    out
}

/// `ℏ → 0` shift with the angular integral done numerically.
pub fn shift_quantum_quadrature(
    traj: &Trajectory,
    alpha_c: f64,
    angular: &AngularSpec,
    quad: &QuadratureSpec,
) -> Result<Vector3<f64>> {
    let jf = jacobi_fields(traj)?;
    let rule = SphereRule::new(*angular);
    let out = integrate_adaptive(
        |t, o| {
            let k = traj.kinematics(t).unwrap();
            let (x, xd) = jf.with_rate(t).unwrap();
            let mut acc = Vector3::zeros();
            for (n, w) in rule.points(&k.v) {
                acc += light_front_integrand(&n, &k.v, &k.a, &x, &xd) * w;
            }
            o.copy_from_slice(acc.as_slice());
        },
        &accel_interval(traj),
        3,
        quad,
    )?;
    Ok(Vector3::from_column_slice(&out) * (-alpha_c / (4.0 * PI)))
}

/// Closed forms of `I_n = ∫dΩ n^{⊗n} / (1 - n·v)^{n+2}` for `n = 0..3`.
#[derive(Debug, Clone, Copy)]
pub struct AngularIntegrals {
    pub i0: f64,
    pub i1: Vector3<f64>,
    pub i2: Matrix3<f64>,
    pub i3: [Matrix3<f64>; 3],
}

/// Closed forms; the velocity must be subluminal.
pub fn angular_integrals(v: &Vector3<f64>) -> Result<AngularIntegrals> {
    if !(v.norm() < 1.0) {
        return Err(Error::Config(format!("angular integrals need |v| < 1, got {}", v.norm())));
    }
    let g2 = 1.0 / (1.0 - v.norm_squared());
    let g4 = g2 * g2;
    let g6 = g4 * g2;
    let g8 = g4 * g4;
    let i0 = 4.0 * PI * g2;
    let i1 = v * (4.0 * PI * g4);
    let i2 = v * v.transpose() * (16.0 * PI / 3.0 * g6) + Matrix3::identity() * (4.0 * PI / 3.0 * g4);
    let mut i3 = [Matrix3::zeros(); 3];
    for (k, m) in i3.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                m[(i, j)] = 8.0 * PI * g8 * v[i] * v[j] * v[k]
                    + 4.0 * PI / 3.0 * g6 * (d(i, j) * v[k] + d(i, k) * v[j] + d(j, k) * v[i]);
            }
        }
    }
    Ok(AngularIntegrals { i0, i1, i2, i3 })
}

/// The same integrals by quadrature about the axis `v`.
pub fn angular_integrals_numeric(v: &Vector3<f64>, spec: &AngularSpec) -> AngularIntegrals {
    let rule = SphereRule::new(*spec);
    let mut out = AngularIntegrals { i0: 0.0, i1: Vector3::zeros(), i2: Matrix3::zeros(), i3: [Matrix3::zeros(); 3] };
    for (n, w) in rule.points(v) {
        let d = 1.0 / (1.0 - n.dot(v));
        let d2 = d * d;
        out.i0 += w * d2;
        out.i1 += n * (w * d2 * d);
        let nn = n * n.transpose();
        out.i2 += nn * (w * d2 * d2);
        for k in 0..3 {
            out.i3[k] += nn * (w * d2 * d2 * d * n[k]);
        }
    }
    out
}

/// Which routes `compare_routes` evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Direct,
    Green,
    Quantum,
    Quadrature,
    Amplitude,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Direct => "direct",
            Route::Green => "green",
            Route::Quantum => "quantum",
            Route::Quadrature => "quadrature",
            Route::Amplitude => "amplitude",
        }
    }

    pub fn parse(s: &str) -> Option<Route> {
        Some(match s {
            "direct" => Route::Direct,
            "green" => Route::Green,
            "quantum" => Route::Quantum,
            "quadrature" => Route::Quadrature,
            "amplitude" => Route::Amplitude,
            _ => return None,
        })
    }

    /// The default set: everything except the (slow) amplitude route.
    pub fn standard() -> Vec<Route> {
        vec![Route::Direct, Route::Green, Route::Quantum, Route::Quadrature]
    }
}

/// Numerical settings for a route comparison.
#[derive(Debug, Clone)]
pub struct RouteSettings {
    pub quad: QuadratureSpec,
    pub angular: AngularSpec,
    pub green_mode: GreenMode,
    pub routes: Vec<Route>,
    pub amplitude: crate::semiclassical::AmplitudeSettings,
    /// PASS when the largest pairwise relative residual is below this.
    pub threshold: f64,
    /// Record wall-clock time per route (off for byte-reproducible reports).
    pub timings: bool,
}

impl Default for RouteSettings {
    fn default() -> Self {
        RouteSettings {
            quad: QuadratureSpec::default(),
            angular: AngularSpec::default(),
            green_mode: GreenMode::Swap,
            routes: Route::standard(),
            amplitude: Default::default(),
            threshold: 1e-4,
            timings: true,
        }
    }
}

/// Outcome of one route; failed routes carry NaN shifts and the error.
#[derive(Debug, Clone, Serialize)]
pub struct RouteOutcome {
    pub route: Route,
    pub shift: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

/// Shifts by every requested route and their pairwise residuals. Missing or
/// failed routes are NaN (serialised as `null`).
#[derive(Debug, Clone, Serialize)]
pub struct ShiftReport {
    pub delta_x_direct: [f64; 3],
    pub delta_x_green: [f64; 3],
    pub delta_x_quantum: [f64; 3],
    pub delta_x_quantum_quadrature: [f64; 3],
    pub delta_x_amplitude: [f64; 3],
    pub routes: Vec<RouteOutcome>,
    /// `residuals[a][b] = |δx_a - δx_b| / max(|δx_green|, floor)`, in the
    /// order of `routes`.
    pub residuals: Vec<Vec<f64>>,
    pub max_residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl ShiftReport {
    pub fn get(&self, route: Route) -> Option<Vector3<f64>> {
        self.routes.iter().find(|r| r.route == route).map(|r| Vector3::from(r.shift)).filter(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Largest pairwise `|a - b|` divided by `max(scale, floor)`.
pub fn relative_residual(shifts: &[Vector3<f64>], scale: f64, floor: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for a in shifts {
        for b in shifts {
            worst = worst.max((a - b).norm());
        }
    }
    worst / scale.max(floor)
}

/// Length scale of the trajectory (for the residual floor).
fn length_scale(traj: &Trajectory) -> f64 {
    traj.kinematics(traj.t_min).map(|k| k.x.norm()).unwrap_or(1.0).max(traj.duration()).max(1e-300)
}

pub fn run_route(traj: &Trajectory, alpha_c: f64, route: Route, settings: &RouteSettings) -> Result<Vector3<f64>> {
    match route {
        Route::Direct => classical_shift_direct(traj, alpha_c),
        Route::Green => classical_shift_green(traj, alpha_c, &settings.quad, settings.green_mode),
        Route::Quantum => shift_quantum_closed(traj, alpha_c, &settings.quad),
        Route::Quadrature => shift_quantum_quadrature(traj, alpha_c, &settings.angular, &settings.quad),
        Route::Amplitude => Ok(crate::semiclassical::shift_from_amplitudes(traj, alpha_c, &settings.amplitude)?.shift),
    }
}

/// Run every requested route. Failures are recorded, never propagated.
pub fn compare_routes(traj: &Trajectory, alpha_c: f64, settings: &RouteSettings) -> ShiftReport {
    let nan = [f64::NAN; 3];
    let mut routes = Vec::new();
    for &route in &settings.routes {
        let start = std::time::Instant::now();
        let (shift, error) = match run_route(traj, alpha_c, route, settings) {
            Ok(v) => ([v.x, v.y, v.z], None),
            Err(e) => (nan, Some(e.to_string())),
        };
        let seconds = settings.timings.then(|| start.elapsed().as_secs_f64());
        routes.push(RouteOutcome { route, shift, error, seconds });
    }
    let find = |r: Route| routes.iter().find(|o| o.route == r).map(|o| o.shift).unwrap_or(nan);
    let vs: Vec<Vector3<f64>> = routes.iter().map(|o| Vector3::from(o.shift)).collect();
    let scale = match routes.iter().find(|o| o.route == Route::Green) {
        Some(o) => Vector3::from(o.shift).norm(),
        None => vs.iter().map(|v| v.norm()).fold(0.0, f64::max),
    };
    let floor = 1e-16 * length_scale(traj);
    let residuals: Vec<Vec<f64>> =
        vs.iter().map(|a| vs.iter().map(|b| (a - b).norm() / scale.max(floor)).collect()).collect();
    let max_residual = residuals.iter().flatten().fold(0.0, |m: f64, &r| if r.is_nan() || m.is_nan() { f64::NAN } else { m.max(r) });
    let pass = max_residual.is_finite() && max_residual < settings.threshold && !routes.is_empty();
    ShiftReport {
        delta_x_direct: find(Route::Direct),
        delta_x_green: find(Route::Green),
        delta_x_quantum: find(Route::Quantum),
        delta_x_quantum_quadrature: find(Route::Quadrature),
        delta_x_amplitude: find(Route::Amplitude),
        routes,
        residuals,
        max_residual,
        threshold: settings.threshold,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{Axis, PotentialProfile, TransitionShape};

    #[test]
    fn angular_closed_forms_match_quadrature() {
        let v = Vector3::new(0.3, -0.4, 0.5);
        let a = angular_integrals(&v).unwrap();
        let b = angular_integrals_numeric(&v, &AngularSpec { n_polar: 64, n_azimuth: 64 });
        assert!((a.i0 - b.i0).abs() < 1e-11 * a.i0);
        assert!((a.i1 - b.i1).amax() < 1e-11 * a.i0);
        assert!((a.i2 - b.i2).amax() < 1e-11 * a.i0);
        for k in 0..3 {
            assert!((a.i3[k] - b.i3[k]).amax() < 1e-10 * a.i0);
        }
    }

    #[test]
    fn routes_agree_time_axis() {
        let prof = PotentialProfile::step(Axis::Time, [0.0, 0.0, 0.0, 0.5], 2.0, 1.0, TransitionShape::Smoothstep7);
        let traj = Trajectory::new(&prof, 1.0, Vector3::new(0.0, 0.0, 0.8), 1e-12).unwrap();
        let s = RouteSettings { angular: AngularSpec { n_polar: 32, n_azimuth: 32 }, ..Default::default() };
        let cmp = compare_routes(&traj, 1.0 / 137.0, &s);
        assert!(cmp.pass && cmp.max_residual < 1e-6, "{cmp:?}");
    }

    #[test]
    fn failures_are_recorded_not_thrown() {
        let prof = PotentialProfile::step(Axis::Time, [0.0, 0.0, 0.0, 0.5], 2.0, 1.0, TransitionShape::Smoothstep7);
        let traj = Trajectory::new(&prof, 1.0, Vector3::new(0.0, 0.0, 0.8), 1e-12).unwrap();
        let quad = QuadratureSpec { max_subdivisions: 1, rel_tol: 1e-16, abs_tol: 0.0 };
        let s = RouteSettings { quad, routes: vec![Route::Direct, Route::Quantum], ..Default::default() };
        let r = compare_routes(&traj, 1.0 / 137.0, &s);
        assert!(!r.pass);
        assert!(r.delta_x_quantum[0].is_nan() && r.routes[1].error.is_some());
        assert!(r.delta_x_direct[2].is_finite());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"delta_x_quantum\":[null,null,null]"));
    }
}

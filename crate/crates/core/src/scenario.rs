//! Scenario files, the standard test scenarios, and report/CSV output.
//!
//! Units: `c = 1`; mass, momenta and potentials share one user-chosen unit.
//! The charge `e` enters only through `α_c = e²/4π`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::lorentz_dirac::{coordinate_force, four_force, larmor_power};
use crate::potentials::{Axis, PotentialProfile, TransitionShape};
use crate::quadrature::{AngularSpec, QuadratureSpec};
use crate::semiclassical::{AmplitudeSettings, CutoffWindow, SpectrumSample};
use crate::shift::{compare_routes, GreenMode, Route, RouteSettings, ShiftReport};
use crate::variational::jacobi_fields;

/// Largest speed a scenario may reach.
pub const MAX_SPEED: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance of every ODE integration.
    pub integrator: f64,
    /// PASS threshold on the largest relative route residual.
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub report: Option<PathBuf>,
    pub trajectory_csv: Option<PathBuf>,
    pub force_csv: Option<PathBuf>,
    pub spectrum_csv: Option<PathBuf>,
}

/// Wave numbers for spectra: `count` points spread evenly over `[k_min, k_max]`,
/// with the directions used when a spectrum is written alongside a report
/// (the `+z` axis if none are given).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGrid {
    pub k_min: f64,
    pub k_max: f64,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub directions: Vec<[f64; 3]>,
}

impl KGrid {
    pub fn direction_vectors(&self) -> Result<Vec<Vector3<f64>>> {
        if self.directions.is_empty() {
            return Ok(vec![Vector3::z()]);
        }
        self.directions
            .iter()
            .map(|d| {
                let v = Vector3::from(*d);
                if v.norm() > 0.0 && v.iter().all(|x| x.is_finite()) {
                    Ok(v.normalize())
                } else {
                    Err(Error::Config(format!("spectrum direction {d:?} is not a valid vector")))
                }
            })
            .collect()
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.k_min];
        }
        (0..self.count).map(|i| self.k_min + (self.k_max - self.k_min) * i as f64 / (self.count - 1) as f64).collect()
    }
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub profile: PotentialProfile,
    pub mass: f64,
    /// Charge `e`; `α_c = e²/4π`.
    pub charge: f64,
    /// Momentum at `t = 0`, where the potential vanishes.
    pub p_final: [f64; 3],
    pub tolerances: Tolerances,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub angular: AngularSpec,
    #[serde(default)]
    pub green_mode: GreenMode,
    #[serde(default)]
    pub amplitude: AmplitudeSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<KGrid>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hbars: Vec<f64>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: u64,
}

const REQUIRED: [&str; 5] = ["profile", "mass", "charge", "p_final", "tolerances"];
const REQUIRED_PROFILE: [&str; 4] = ["axis", "v_past", "x1", "x2"];
const REQUIRED_TOL: [&str; 2] = ["integrator", "residual"];

/// Every required key absent from a scenario document, as dotted paths.
pub fn missing_keys(doc: &Value) -> Vec<String> {
    let mut out = Vec::new();
    let Some(obj) = doc.as_object() else {
        return REQUIRED.iter().map(|s| s.to_string()).collect();
    };
    for k in REQUIRED {
        if !obj.contains_key(k) {
            out.push(k.to_string());
        }
    }
    for (section, keys) in [("profile", &REQUIRED_PROFILE[..]), ("tolerances", &REQUIRED_TOL[..])] {
        if let Some(sub) = obj.get(section).and_then(Value::as_object) {
            for k in keys {
                if !sub.contains_key(*k) {
                    out.push(format!("{section}.{k}"));
                }
            }
        }
    }
    out
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        let doc: Value = serde_json::from_str(text)?;
        let missing = missing_keys(&doc);
        if !missing.is_empty() {
            return Err(Error::Config(format!("missing required keys: {}", missing.join(", "))));
        }
        let sc: Scenario = serde_json::from_value(doc)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        Scenario::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn alpha_c(&self) -> f64 {
        self.charge * self.charge / (4.0 * PI)
    }

    pub fn p_final(&self) -> Vector3<f64> {
        Vector3::from(self.p_final)
    }

    /// Checks that do not need the trajectory.
    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        let t = &self.tolerances;
        if !(t.integrator > 0.0 && t.integrator < 1e-3) {
            return Err(Error::Config(format!("tolerances.integrator must lie in (0, 1e-3), got {}", t.integrator)));
        }
        if !(t.residual >= 10.0 * t.integrator) {
            return Err(Error::Config(format!(
                "tolerances.residual ({}) must be at least 10x tolerances.integrator ({})",
                t.residual, t.integrator
            )));
        }
        if !(self.mass > 0.0) {
            return Err(Error::Config(format!("mass must be positive, got {}", self.mass)));
        }
        if !self.charge.is_finite() || self.p_final.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("charge and p_final must be finite".into()));
        }
        if self.hbars.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::Config("hbars must be positive".into()));
        }
        Ok(())
    }

    /// Integrate the trajectory and check the speed limit.
    pub fn trajectory(&self) -> Result<Trajectory> {
        let traj = Trajectory::new(&self.profile, self.mass, self.p_final(), self.tolerances.integrator)?;
        let vmax = traj.peak_speed();
        if vmax > MAX_SPEED {
            return Err(Error::Config(format!("peak speed {vmax:.4} exceeds {MAX_SPEED}")));
        }
        Ok(traj)
    }

    pub fn route_settings(&self, routes: Vec<Route>, timings: bool) -> RouteSettings {
        RouteSettings {
            quad: self.quadrature,
            angular: self.angular,
            green_mode: self.green_mode,
            routes,
            amplitude: self.amplitude,
            threshold: self.tolerances.residual,
            timings,
        }
    }

    pub fn window(&self, traj: &Trajectory) -> Result<CutoffWindow> {
        self.amplitude.window(traj)
    }

    /// The standard scenarios `a`–`d` (unit mass, `α_c = 1/137`).
    pub fn standard(name: &str) -> Option<Scenario> {
        let deg60 = PI / 3.0;
        let (axis, v_past, p) = match name {
            "a" | "collinear" => (Axis::Time, [0.0, 0.0, 0.0, 0.5], [0.0, 0.0, 0.8]),
            "b" | "oblique" => (Axis::Time, [0.0, 0.8 * deg60.sin(), 0.0, 0.8 * deg60.cos()], [0.0, 0.0, 1.3]),
            "c" | "static" => (Axis::Z, [0.2, 0.3, 0.0, 0.0], [0.3, 0.0, 0.8]),
            "d" | "weak" => (Axis::Time, [0.0, 0.01, 0.0, 0.005], [0.1, 0.0, 0.2]),
            _ => return None,
        };
        let label = match name {
            "a" | "collinear" => "collinear",
            "b" | "oblique" => "oblique",
            "c" | "static" => "static",
            _ => "weak",
        };
        Some(Scenario {
            name: label.into(),
            profile: PotentialProfile::step(axis, v_past, 2.0, 1.0, TransitionShape::Smoothstep7),
            mass: 1.0,
            charge: (4.0 * PI / 137.0).sqrt(),
            p_final: p,
            tolerances: Tolerances { integrator: 1e-12, residual: 1e-4 },
            quadrature: QuadratureSpec::default(),
            angular: AngularSpec::default(),
            green_mode: GreenMode::Swap,
            amplitude: AmplitudeSettings::default(),
            spectrum: None,
            hbars: Vec::new(),
            outputs: Outputs::default(),
            seed: 0,
        })
    }

    pub fn standard_names() -> [&'static str; 4] {
        ["collinear", "oblique", "static", "weak"]
    }
}

/// Summary of the integrated trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySummary {
    pub t1: f64,
    pub t2: f64,
    pub t_min: f64,
    pub peak_speed: f64,
    pub v_past: [f64; 3],
    pub v_future: [f64; 3],
}

impl TrajectorySummary {
    pub fn of(traj: &Trajectory) -> Self {
        let (a, b) = traj.asymptotic_velocities();
        TrajectorySummary { t1: traj.t1, t2: traj.t2, t_min: traj.t_min, peak_speed: traj.peak_speed(), v_past: a.into(), v_future: b.into() }
    }
}

/// The report written by `shift`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub alpha_c: f64,
    pub trajectory: TrajectorySummary,
    #[serde(flatten)]
    pub shift: ShiftReport,
}

/// Build the trajectory and compare the requested routes.
pub fn run_scenario(sc: &Scenario, routes: Vec<Route>, timings: bool) -> Result<(Trajectory, RunReport)> {
    sc.validate()?;
    let traj = sc.trajectory()?;
    let settings = sc.route_settings(routes, timings);
    let shift = compare_routes(&traj, sc.alpha_c(), &settings);
    let report = RunReport { scenario: sc.clone(), alpha_c: sc.alpha_c(), trajectory: TrajectorySummary::of(&traj), shift };
    Ok((traj, report))
}

/// Full-precision float for CSV output.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn row(cols: &[f64]) -> String {
    cols.iter().map(|&x| fmt17(x)).collect::<Vec<_>>().join(",")
}

fn time_samples(traj: &Trajectory, n: usize) -> impl Iterator<Item = f64> + '_ {
    (0..n).map(move |i| traj.t_min * (1.0 - i as f64 / (n - 1) as f64) + 0.0)
}

/// `t, x, y, z, px, py, pz, vx, vy, vz` on a uniform grid.
pub fn trajectory_csv(traj: &Trajectory, samples: usize) -> Result<String> {
    let mut s = String::from("t,x,y,z,px,py,pz,vx,vy,vz\n");
    for t in time_samples(traj, samples.max(2)) {
        let k = traj.kinematics(t)?;
        let _ = writeln!(s, "{}", row(&[t, k.x.x, k.x.y, k.x.z, k.p.x, k.p.y, k.p.z, k.v.x, k.v.y, k.v.z]));
    }
    Ok(s)
}

/// Radiation-reaction four-force, coordinate-time force and Larmor power
/// along the trajectory.
pub fn force_profile_csv(traj: &Trajectory, alpha_c: f64, samples: usize) -> Result<String> {
    let mut s = String::from("t,F0,F1,F2,F3,fx,fy,fz,larmor_power\n");
    for t in time_samples(traj, samples.max(2)) {
        let k = traj.kinematics(t)?;
        let f4 = four_force(&k, alpha_c);
        let f = coordinate_force(&k, alpha_c);
        let _ = writeln!(s, "{}", row(&[t, f4[0], f4[1], f4[2], f4[3], f.x, f.y, f.z, larmor_power(&k, alpha_c)]));
    }
    Ok(s)
}

/// Jacobi fields `X[k][i] = Δx^k_(i)(t; 0)` and their momentum parts.
pub fn jacobi_csv(traj: &Trajectory, samples: usize) -> Result<String> {
    let jf = jacobi_fields(traj)?;
    let mut s = String::from("t");
    for part in ["x", "p"] {
        for k in 0..3 {
            for i in 0..3 {
                let _ = write!(s, ",{part}{k}{i}");
            }
        }
    }
    s.push('\n');
    for t in time_samples(traj, samples.max(2)) {
        let (x, p) = jf.at(t)?;
        let mut cols = vec![t];
        for m in [x, p] {
            for k in 0..3 {
                for i in 0..3 {
                    cols.push(m[(k, i)]);
                }
            }
        }
        let _ = writeln!(s, "{}", row(&cols));
    }
    Ok(s)
}

pub fn spectrum_csv(samples: &[SpectrumSample]) -> String {
    let mut s = String::from("k,nx,ny,nz,re_a0,im_a0,re_a1,im_a1,re_a2,im_a2,re_a3,im_a3,d2e_dk_domega\n");
    for r in samples {
        let mut cols = vec![r.k, r.n[0], r.n[1], r.n[2]];
        for z in r.a {
            cols.push(z.re);
            cols.push(z.im);
        }
        cols.push(r.d2e);
        let _ = writeln!(s, "{}", row(&cols));
    }
    s
}

/// Directions from text: one `nx ny nz` triple per line (commas or spaces;
/// `#` starts a comment). Vectors are normalised.
pub fn parse_directions(text: &str) -> Result<Vec<Vector3<f64>>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> =
            line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).map(str::parse).collect();
        match vals {
            Ok(v) if v.len() == 3 && v.iter().any(|x| *x != 0.0) => out.push(Vector3::new(v[0], v[1], v[2]).normalize()),
            _ => return Err(Error::Config(format!("direction file line {}: expected three numbers, not all zero", i + 1))),
        }
    }
    if out.is_empty() {
        return Err(Error::Config("direction file contains no directions".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_keys_are_all_listed() {
        let doc: Value = serde_json::from_str(r#"{"charge": 0.3, "profile": {"axis": "time", "x1": 2.0}}"#).unwrap();
        let m = missing_keys(&doc);
        for k in ["mass", "p_final", "tolerances", "profile.v_past", "profile.x2"] {
            assert!(m.iter().any(|x| x == k), "{k} not reported in {m:?}");
        }
    }

    #[test]
    fn standard_scenarios_round_trip() {
        for name in Scenario::standard_names() {
            let sc = Scenario::standard(name).unwrap();
            let text = serde_json::to_string(&sc).unwrap();
            assert_eq!(Scenario::from_json(&text).unwrap(), sc);
        }
    }

    #[test]
    fn residual_threshold_must_exceed_integrator_tolerance() {
        let mut sc = Scenario::standard("a").unwrap();
        sc.tolerances.residual = 5e-12;
        assert!(matches!(sc.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn directions_parse() {
        let d = parse_directions("# n\n0 0 2\n1,0,0\n").unwrap();
        assert_eq!(d, vec![Vector3::z(), Vector3::x()]);
        assert!(parse_directions("1 2\n").is_err());
    }
}

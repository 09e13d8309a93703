//! Classical motion of the charge, integrated backward from the anchor
//! `x(0) = 0, P = p_final`.
//!
//! With `w = P - V` and `σ = √(w² + m²)` the Hamiltonian is `H = σ + V⁰`, so
//! `ẋ = w/σ` and `Ṗ = -∂H/∂x`. For a time-dependent potential `P` is
//! conserved; for `V(z)` only its transverse part is.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::ode::{integrate, integrate_piecewise, DenseOutput, OdeOptions};
use crate::potentials::{Axis, PotentialProfile};

/// Kinematic quantities at a single instant.
#[derive(Debug, Clone, Copy)]
pub struct Kinematics {
    pub t: f64,
    pub x: Vector3<f64>,
    /// Canonical momentum.
    pub canonical: Vector3<f64>,
    /// Mechanical momentum `p = P - V`.
    pub p: Vector3<f64>,
    /// `σ = γ m`, the kinetic energy including rest mass.
    pub sigma: f64,
    pub v: Vector3<f64>,
    pub a: Vector3<f64>,
    /// `da/dt`.
    pub jerk: Vector3<f64>,
    pub gamma: f64,
    /// Lorentz force `dp/dt`.
    pub force: Vector3<f64>,
    pub force_dot: Vector3<f64>,
}

/// Second derivatives of the Hamiltonian: `xx[i][j] = ∂²H/∂xⁱ∂xʲ`,
/// `xp[i][j] = ∂²H/∂xⁱ∂Pʲ`, `pp[i][j] = ∂²H/∂Pⁱ∂Pʲ`.
#[derive(Debug, Clone, Copy)]
pub struct Hessian {
    pub xx: Matrix3<f64>,
    pub xp: Matrix3<f64>,
    pub pp: Matrix3<f64>,
}

/// Trajectory on `[t_min, 0]` with dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub profile: PotentialProfile,
    pub mass: f64,
    pub p_final: Vector3<f64>,
    /// Start and end of the acceleration interval.
    pub t1: f64,
    pub t2: f64,
    pub t_min: f64,
    pub tol: f64,
    dense: DenseOutput,
}

fn axis_coordinate(profile: &PotentialProfile, t: f64, x: &Vector3<f64>) -> f64 {
    match profile.axis {
        Axis::Time => t,
        Axis::Z => x.z,
    }
}

fn rhs(profile: &PotentialProfile, mass: f64, t: f64, y: &[f64], dy: &mut [f64]) {
    let x = Vector3::new(y[0], y[1], y[2]);
    let pc = Vector3::new(y[3], y[4], y[5]);
    let d = profile.derivatives(axis_coordinate(profile, t, &x));
    let w = pc - d[0].fixed_rows::<3>(1).into_owned();
    let sigma = (w.norm_squared() + mass * mass).sqrt();
    let v = w / sigma;
    dy[0] = v.x;
    dy[1] = v.y;
    dy[2] = v.z;
    dy[3] = 0.0;
    dy[4] = 0.0;
    dy[5] = 0.0;
    if profile.axis == Axis::Z {
        let g = d[1].fixed_rows::<3>(1).into_owned();
        dy[5] = v.dot(&g) - d[1][0];
    }
}

/// Kinematics from a phase-space point, shared by the trajectory and by the
/// straight-line extrapolation outside its domain.
pub fn kinematics_at(profile: &PotentialProfile, mass: f64, t: f64, x: Vector3<f64>, pc: Vector3<f64>) -> Kinematics {
    let d = profile.derivatives(axis_coordinate(profile, t, &x));
    let spatial = |k: usize| d[k].fixed_rows::<3>(1).into_owned();
    let p = pc - spatial(0);
    let sigma = (p.norm_squared() + mass * mass).sqrt();
    let v = p / sigma;
    let (force, a, force_dot);
    match profile.axis {
        Axis::Time => {
            force = -spatial(1);
            a = (force - v * v.dot(&force)) / sigma;
            force_dot = -spatial(2);
        }
        Axis::Z => {
            let (g, g1) = (spatial(1), spatial(2));
            let (g0, g01) = (d[1][0], d[2][0]);
            force = Vector3::z() * (v.dot(&g) - g0) - g * v.z;
            a = (force - v * v.dot(&force)) / sigma;
            force_dot = Vector3::z() * (a.dot(&g) + v.dot(&g1) * v.z - g01 * v.z) - g * a.z - g1 * (v.z * v.z);
        }
    }
    let vf = v.dot(&force);
    let jerk = (force_dot - v * v.dot(&force_dot) - v * a.dot(&force) - a * (2.0 * vf)) / sigma;
    Kinematics { t, x, canonical: pc, p, sigma, v, a, jerk, gamma: sigma / mass, force, force_dot }
}

/// Hessian of `H` at a phase-space point.
pub fn hessian_at(profile: &PotentialProfile, mass: f64, t: f64, x: Vector3<f64>, pc: Vector3<f64>) -> Hessian {
    let d = profile.derivatives(axis_coordinate(profile, t, &x));
    let spatial = |k: usize| d[k].fixed_rows::<3>(1).into_owned();
    let w = pc - spatial(0);
    let sigma = (w.norm_squared() + mass * mass).sqrt();
    let v = w / sigma;
    let pp = (Matrix3::identity() - v * v.transpose()) / sigma;
    let mut xx = Matrix3::zeros();
    let mut xp = Matrix3::zeros();
    if profile.axis == Axis::Z {
        let (g, g1) = (spatial(1), spatial(2));
        let vg = v.dot(&g);
        let row = -(g - v * vg) / sigma;
        xp.set_row(2, &row.transpose());
        xx[(2, 2)] = (g.norm_squared() - vg * vg) / sigma - v.dot(&g1) + d[2][0];
    }
    Hessian { xx, xp, pp }
}

/// Smallest forward speed along the path in a static `V(z)`; fails if the
/// particle would turn around before leaving the region.
fn traversal_speed(profile: &PotentialProfile, mass: f64, p_final: &Vector3<f64>) -> Result<f64> {
    let energy = (p_final.norm_squared() + mass * mass).sqrt();
    let transverse = Vector3::new(p_final.x, p_final.y, 0.0);
    let (lo, hi) = profile.support();
    let n = 4000;
    let mut vmin = f64::INFINITY;
    for i in 0..=n {
        let z = lo + (hi - lo) * i as f64 / n as f64;
        let vv = profile.value(z);
        let sigma = energy - vv[0];
        let wt = transverse - Vector3::new(vv[1], vv[2], 0.0);
        let wz2 = sigma * sigma - mass * mass - wt.norm_squared();
        if sigma <= 0.0 || wz2 <= 0.0 {
            return Err(Error::Reflected(format!("longitudinal momentum vanishes near z = {z:.6}")));
        }
        vmin = vmin.min(wz2.sqrt() / sigma);
    }
    Ok(vmin)
}

fn bisect_crossing(dense: &DenseOutput, level: f64, mut a: f64, mut b: f64) -> f64 {
    // z(t) is increasing; a < b with z(a) <= level <= z(b).
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if dense.eval(m)[2] < level {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

impl Trajectory {
    /// Integrate the motion backward from `t = 0`.
    pub fn new(profile: &PotentialProfile, mass: f64, p_final: Vector3<f64>, tol: f64) -> Result<Trajectory> {
        profile.validate()?;
        if !(mass > 0.0) {
            return Err(Error::Config(format!("mass must be positive, got {mass}")));
        }
        let y0 = [0.0, 0.0, 0.0, p_final.x, p_final.y, p_final.z];
        let opts = OdeOptions::new(tol);
        let f = |t: f64, y: &[f64], dy: &mut [f64]| rhs(profile, mass, t, y, dy);

        let (t1, t2) = match profile.axis {
            Axis::Time => (-profile.x1, -profile.x2),
            Axis::Z => {
                if p_final.z <= 0.0 {
                    return Err(Error::Reflected("p_final must point along +z to traverse the region".into()));
                }
                let vmin = traversal_speed(profile, mass, &p_final)?;
                let horizon = -2.0 * (profile.x1 / vmin + 1.0);
                let edge = -profile.x1;
                let mut stop = |_t: f64, y: &[f64]| y[2] < edge - 0.05 * profile.width();
                let scout = integrate(f, 0.0, &y0, horizon, &opts, Some(&mut stop))?;
                let t_end = scout.last_time();
                if scout.last_state()[2] >= edge {
                    return Err(Error::Reflected("trajectory did not leave the transition region".into()));
                }
                let t2 = if profile.x2 == 0.0 { 0.0 } else { bisect_crossing(&scout, -profile.x2, t_end, 0.0) };
                let t1 = bisect_crossing(&scout, edge, t_end, t2);
                (t1, t2)
            }
        };
        let t_min = t1 - 0.1 * (t2 - t1);
        let dense = integrate_piecewise(f, 0.0, &y0, t_min, &[t2, t1], &opts)?;
        let mut traj = Trajectory { profile: profile.clone(), mass, p_final, t1, t2, t_min, tol, dense };
        if profile.axis == Axis::Z {
            // Refine crossing times on the final solution.
            if profile.x2 > 0.0 {
                traj.t2 = bisect_crossing(&traj.dense, -profile.x2, t_min, 0.0);
            }
            traj.t1 = bisect_crossing(&traj.dense, -profile.x1, t_min, traj.t2);
        }
        Ok(traj)
    }

    /// Duration of the acceleration interval.
    pub fn duration(&self) -> f64 {
        self.t2 - self.t1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t_min, 0.0)
    }

    pub fn dense(&self) -> &DenseOutput {
        &self.dense
    }

    fn check(&self, t: f64) -> Result<()> {
        if self.dense.contains(t) {
            Ok(())
        } else {
            Err(Error::Range { t, lo: self.t_min, hi: 0.0 })
        }
    }

    /// `(x, P)` at time `t`.
    pub fn phase_point(&self, t: f64) -> Result<(Vector3<f64>, Vector3<f64>)> {
        self.check(t)?;
        let mut y = [0.0; 6];
        self.dense.eval_into(t, &mut y);
        Ok((Vector3::new(y[0], y[1], y[2]), Vector3::new(y[3], y[4], y[5])))
    }

    pub fn kinematics(&self, t: f64) -> Result<Kinematics> {
        let (x, pc) = self.phase_point(t)?;
        Ok(kinematics_at(&self.profile, self.mass, t, x, pc))
    }

    /// Kinematics on the whole real line: outside the integrated domain the
    /// motion is uniform (the potential is constant there).
    pub fn extended_kinematics(&self, t: f64) -> Kinematics {
        let edge = if t < self.t_min {
            Some(self.t_min)
        } else if t > 0.0 {
            Some(0.0)
        } else {
            None
        };
        match edge {
            None => self.kinematics(t).expect("inside domain"),
            Some(te) => {
                let k0 = self.kinematics(te).expect("domain edge");
                let x = k0.x + k0.v * (t - te);
                kinematics_at(&self.profile, self.mass, t, x, k0.canonical)
            }
        }
    }

    pub fn hessian(&self, t: f64) -> Result<Hessian> {
        let (x, pc) = self.phase_point(t)?;
        Ok(hessian_at(&self.profile, self.mass, t, x, pc))
    }

    /// Asymptotic velocities `(v_past, v_future)`.
    pub fn asymptotic_velocities(&self) -> (Vector3<f64>, Vector3<f64>) {
        (self.kinematics(self.t_min).unwrap().v, self.kinematics(0.0).unwrap().v)
    }

    /// Maximum speed over the trajectory (sampled).
    pub fn peak_speed(&self) -> f64 {
        (0..=400)
            .map(|i| self.t_min * i as f64 / 400.0)
            .map(|t| self.kinematics(t).unwrap().v.norm())
            .fold(0.0, f64::max)
    }
}

pub fn integrate_trajectory(profile: &PotentialProfile, mass: f64, p_final: Vector3<f64>, tol: f64) -> Result<Trajectory> {
    Trajectory::new(profile, mass, p_final, tol)
}

/// `dp/dt` along the trajectory.
pub fn lorentz_force(traj: &Trajectory, t: f64) -> Result<Vector3<f64>> {
    Ok(traj.kinematics(t)?.force)
}

pub fn kinematics(traj: &Trajectory, t: f64) -> Result<Kinematics> {
    traj.kinematics(t)
}

pub fn hessian(traj: &Trajectory, t: f64) -> Result<Hessian> {
    traj.hessian(t)
}

//! Linearised dynamics about a trajectory.
//!
//! Small deviations `(δx, δP)` obey
//!
//! ```text
//! dδx/dt =  H_xPᵀ δx + H_PP δP
//! dδP/dt = -H_xx δx  - H_xP δP + 𝓕
//! ```
//!
//! where `𝓕` is an external force (zero for Jacobi fields). Matrix-valued
//! solutions are propagated as 18 reals: the three columns of `δx` followed by
//! the three columns of `δP`.

use nalgebra::{Matrix3, Vector3};

use crate::dynamics::{Hessian, Trajectory};
use crate::error::{Error, Result};
use crate::lorentz_dirac::coordinate_force;
use crate::ode::{integrate_piecewise, DenseOutput, OdeOptions};

fn mat_from(y: &[f64]) -> Matrix3<f64> {
    Matrix3::from_column_slice(&y[..9])
}

/// Right-hand side of the linearised equations for `ncols` columns.
fn linear_rhs(h: &Hessian, ncols: usize, y: &[f64], dy: &mut [f64]) {
    let xpt = h.xp.transpose();
    let off = 3 * ncols;
    for c in 0..ncols {
        let dx = Vector3::new(y[3 * c], y[3 * c + 1], y[3 * c + 2]);
        let dp = Vector3::new(y[off + 3 * c], y[off + 3 * c + 1], y[off + 3 * c + 2]);
        let ddx = xpt * dx + h.pp * dp;
        let ddp = -(h.xx * dx) - h.xp * dp;
        dy[3 * c..3 * c + 3].copy_from_slice(ddx.as_slice());
        dy[off + 3 * c..off + 3 * c + 3].copy_from_slice(ddp.as_slice());
    }
}

fn check_domain(traj: &Trajectory, t: f64) -> Result<()> {
    let (lo, hi) = traj.domain();
    if t < lo || t > hi {
        return Err(Error::Range { t, lo, hi });
    }
    Ok(())
}

/// Propagate `ncols` homogeneous solutions from `t0` to `t_end`.
fn propagate(traj: &Trajectory, t0: f64, y0: &[f64], t_end: f64, ncols: usize, tol: f64) -> Result<DenseOutput> {
    check_domain(traj, t0)?;
    check_domain(traj, t_end)?;
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let h = traj.hessian(t.clamp(traj.t_min, 0.0)).expect("clamped");
        linear_rhs(&h, ncols, y, dy);
    };
    let opts = OdeOptions::new(tol);
    integrate_piecewise(rhs, t0, y0, t_end, &[traj.t1, traj.t2], &opts)
}

/// Jacobi fields `Δx^k_(i)(t; 0)`: the response at time `t` to a unit kick of
/// `P_i` at `t = 0`.
#[derive(Debug, Clone)]
pub struct JacobiFields {
    dense: DenseOutput,
    traj: Trajectory,
}

impl JacobiFields {
    /// `(X, Π)` with `X[(k, i)] = Δx^k_(i)(t; 0)` and `Π` the momentum part.
    pub fn at(&self, t: f64) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
        check_domain(&self.traj, t)?;
        let mut y = [0.0; 18];
        self.dense.eval_into(t, &mut y);
        Ok((mat_from(&y), mat_from(&y[9..])))
    }

    /// `(X, dX/dt)`; the rate comes from the equations of motion, not from
    /// differentiating the interpolant.
    pub fn with_rate(&self, t: f64) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
        let (x, p) = self.at(t)?;
        let h = self.traj.hessian(t)?;
        Ok((x, h.xp.transpose() * x + h.pp * p))
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }
}

/// Integrate the three Jacobi fields from `t = 0` back to `t_min`.
pub fn jacobi_fields(traj: &Trajectory) -> Result<JacobiFields> {
    let mut y0 = [0.0; 18];
    for i in 0..3 {
        y0[9 + 4 * i] = 1.0;
    }
    let dense = propagate(traj, 0.0, &y0, traj.t_min, 3, traj.tol)?;
    Ok(JacobiFields { dense, traj: traj.clone() })
}

/// Displacement matrix `K[(i, j)] = Δx^i_(j)(t; t0)` for a unit kick of `P_j`
/// at `t0`, together with the momentum response.
pub fn kick_matrix(traj: &Trajectory, t0: f64, t: f64) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
    let mut y0 = [0.0; 18];
    for i in 0..3 {
        y0[9 + 4 * i] = 1.0;
    }
    let dense = propagate(traj, t0, &y0, t, 3, traj.tol)?;
    let y = dense.last_state();
    Ok((mat_from(&y), mat_from(&y[9..])))
}

/// `Δx^i_(j)(t; t0)` as a function of `t`, for a fixed kick time.
pub fn kick_response(traj: &Trajectory, t0: f64, t_end: f64) -> Result<KickResponse> {
    let mut y0 = [0.0; 18];
    for i in 0..3 {
        y0[9 + 4 * i] = 1.0;
    }
    let dense = propagate(traj, t0, &y0, t_end, 3, traj.tol)?;
    Ok(KickResponse { dense })
}

#[derive(Debug, Clone)]
pub struct KickResponse {
    dense: DenseOutput,
}

impl KickResponse {
    pub fn at(&self, t: f64) -> Result<Matrix3<f64>> {
        if !self.dense.contains(t) {
            let (lo, hi) = self.dense.bounds();
            return Err(Error::Range { t, lo, hi });
        }
        Ok(mat_from(&self.dense.eval(t)))
    }
}

/// Solution of the homogeneous equations through arbitrary initial data.
pub fn propagate_deviation(
    traj: &Trajectory,
    t0: f64,
    dx: Vector3<f64>,
    dp: Vector3<f64>,
    t_end: f64,
) -> Result<DeviationPath> {
    let y0 = [dx.x, dx.y, dx.z, dp.x, dp.y, dp.z];
    Ok(DeviationPath { dense: propagate(traj, t0, &y0, t_end, 1, traj.tol)? })
}

/// A single deviation `(δx, δP)(t)`.
#[derive(Debug, Clone)]
pub struct DeviationPath {
    dense: DenseOutput,
}

impl DeviationPath {
    pub fn at(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let y = self.dense.eval(t);
        (Vector3::new(y[0], y[1], y[2]), Vector3::new(y[3], y[4], y[5]))
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.dense.bounds()
    }
}

/// `ω(a, b) = δx_a·δP_b - δP_a·δx_b`, conserved by the homogeneous flow.
pub fn symplectic_product(a: (Vector3<f64>, Vector3<f64>), b: (Vector3<f64>, Vector3<f64>)) -> f64 {
    a.0.dot(&b.1) - a.1.dot(&b.0)
}

/// Response to the radiation-reaction force, switched on with zero data
/// before the acceleration starts.
#[derive(Debug, Clone)]
pub struct Perturbation {
    dense: Option<DenseOutput>,
    t1: f64,
    alpha_c: f64,
}

impl Perturbation {
    /// `(δx, δP)` at time `t` (zero before the acceleration).
    pub fn at(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        match &self.dense {
            Some(d) if t > self.t1 => {
                let y = d.eval(t);
                (Vector3::new(y[0], y[1], y[2]) * self.alpha_c, Vector3::new(y[3], y[4], y[5]) * self.alpha_c)
            }
            _ => (Vector3::zeros(), Vector3::zeros()),
        }
    }

    /// Position shift at `t = 0`.
    pub fn shift(&self) -> Vector3<f64> {
        self.at(0.0).0
    }
}

/// Integrate the perturbation forward from `t1` to `0`. The system is solved
/// for unit coupling and scaled, so the result is exactly linear in `alpha_c`.
pub fn retarded_perturbation(traj: &Trajectory, alpha_c: f64) -> Result<Perturbation> {
    if traj.t1 >= traj.t2 {
        return Ok(Perturbation { dense: None, t1: traj.t1, alpha_c });
    }
    // Unit-coupling solutions are O(α-free scale); tighten the absolute
    // tolerance relative to the force magnitude so weak fields stay accurate.
    let mut fmax: f64 = 0.0;
    for i in 0..=64 {
        let t = traj.t1 + (traj.t2 - traj.t1) * i as f64 / 64.0;
        fmax = fmax.max(coordinate_force(&traj.kinematics(t)?, 1.0).amax());
    }
    let scale = (fmax * traj.duration() * traj.duration().max(1.0)).max(1e-300);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let (x, pc) = traj.phase_point(t.clamp(traj.t_min, 0.0)).expect("clamped");
        let h = crate::dynamics::hessian_at(&traj.profile, traj.mass, t, x, pc);
        linear_rhs(&h, 1, y, dy);
        let k = crate::dynamics::kinematics_at(&traj.profile, traj.mass, t, x, pc);
        let f = coordinate_force(&k, 1.0);
        dy[3] += f.x;
        dy[4] += f.y;
        dy[5] += f.z;
    };
    let opts = OdeOptions::new(traj.tol).with_atol(traj.tol * scale);
    let dense = integrate_piecewise(rhs, traj.t1, &[0.0; 6], 0.0, &[traj.t2], &opts)?;
    Ok(Perturbation { dense: Some(dense), t1: traj.t1, alpha_c })
}

//! Lorentz–Dirac radiation-reaction force along a trajectory.
//!
//! With `w₁ = du/dτ = (γ⁴ v·a, γ⁴(v·a) v + γ² a)` the four-force is
//!
//! ```text
//! F_LD = (2α/3) [ γ dw₁/dt + u (w₁·w₁) ],   w₁·w₁ = -γ⁴ (a² + γ² (v·a)²)
//! ```
//!
//! and its coordinate-time form, the correction to `dp/dt`, is
//! `𝓕 = F_LD(spatial)/γ = (2α/3) [dw₁/dt - γ⁶(a·v)² v - γ⁴ a² v]`.

use nalgebra::Vector3;

use crate::dynamics::{Kinematics, Trajectory};
use crate::error::Result;
use crate::potentials::FourVector;

/// `du/dτ` as a four-vector.
pub fn proper_acceleration(k: &Kinematics) -> FourVector {
    let g2 = k.gamma * k.gamma;
    let va = k.v.dot(&k.a);
    let s = k.a * g2 + k.v * (g2 * g2 * va);
    FourVector::new(g2 * g2 * va, s.x, s.y, s.z)
}

/// Coordinate-time derivative of `du/dτ`.
pub fn proper_acceleration_rate(k: &Kinematics) -> FourVector {
    let g2 = k.gamma * k.gamma;
    let g4 = g2 * g2;
    let va = k.v.dot(&k.a);
    let lead = 4.0 * g4 * g2 * va * va + g4 * (k.a.norm_squared() + k.v.dot(&k.jerk));
    let s = k.v * lead + k.a * (3.0 * g4 * va) + k.jerk * g2;
    FourVector::new(lead, s.x, s.y, s.z)
}

/// Minkowski product with signature (+,-,-,-).
pub fn minkowski(a: &FourVector, b: &FourVector) -> f64 {
    a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
}

/// Four-velocity `γ(1, v)`.
pub fn four_velocity(k: &Kinematics) -> FourVector {
    FourVector::new(k.gamma, k.gamma * k.v.x, k.gamma * k.v.y, k.gamma * k.v.z)
}

/// Lorentz–Dirac four-force from kinematics.
pub fn four_force(k: &Kinematics, alpha_c: f64) -> FourVector {
    let w1 = proper_acceleration(k);
    let dw1 = proper_acceleration_rate(k);
    let u = four_velocity(k);
    (dw1 * k.gamma + u * minkowski(&w1, &w1)) * (2.0 * alpha_c / 3.0)
}

/// `𝓕`: the radiation-reaction correction to `dp/dt`.
pub fn coordinate_force(k: &Kinematics, alpha_c: f64) -> Vector3<f64> {
    let g2 = k.gamma * k.gamma;
    let g4 = g2 * g2;
    let va = k.v.dot(&k.a);
    let dw1 = proper_acceleration_rate(k);
    let rate = Vector3::new(dw1[1], dw1[2], dw1[3]);
    (rate - k.v * (g4 * g2 * va * va + g4 * k.a.norm_squared())) * (2.0 * alpha_c / 3.0)
}

/// Coefficients `(B, C)` of the integrated-by-parts force:
/// `𝓕 = (2α/3)(dB/dt - C)` with `B = γ⁴(a·v)v + γ²a` and
/// `C = γ⁶(a·v)² v + γ⁴ a² v`.
pub fn by_parts_coefficients(k: &Kinematics) -> (Vector3<f64>, Vector3<f64>) {
    let g2 = k.gamma * k.gamma;
    let g4 = g2 * g2;
    let va = k.v.dot(&k.a);
    let b = k.v * (g4 * va) + k.a * g2;
    let c = k.v * (g4 * g2 * va * va + g4 * k.a.norm_squared());
    (b, c)
}

pub fn ld_four_force(traj: &Trajectory, t: f64, alpha_c: f64) -> Result<FourVector> {
    Ok(four_force(&traj.kinematics(t)?, alpha_c))
}

pub fn ld_coordinate_force(traj: &Trajectory, t: f64, alpha_c: f64) -> Result<Vector3<f64>> {
    Ok(coordinate_force(&traj.kinematics(t)?, alpha_c))
}

/// Relativistic Larmor power `(2α/3) γ⁶ [a² - (v×a)²]`.
pub fn larmor_power(k: &Kinematics, alpha_c: f64) -> f64 {
    let g2 = k.gamma * k.gamma;
    2.0 * alpha_c / 3.0 * g2 * g2 * g2 * (k.a.norm_squared() - k.v.cross(&k.a).norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{Axis, PotentialProfile, TransitionShape};

    fn traj() -> Trajectory {
        let prof = PotentialProfile::step(Axis::Time, [0.0, 0.4, 0.0, 0.5], 2.0, 1.0, TransitionShape::Smoothstep7);
        Trajectory::new(&prof, 1.0, Vector3::new(0.1, 0.2, 0.7), 1e-12).unwrap()
    }

    #[test]
    fn coordinate_and_four_force_agree() {
        let tr = traj();
        for i in 0..40 {
            let t = -2.0 + i as f64 / 39.0;
            let k = tr.kinematics(t).unwrap();
            let f4 = four_force(&k, 1.0);
            let f3 = coordinate_force(&k, 1.0) * k.gamma;
            let scale = f4.amax().max(1e-30);
            assert!((Vector3::new(f4[1], f4[2], f4[3]) - f3).amax() < 1e-12 * scale.max(1.0));
            let u = four_velocity(&k);
            assert!(minkowski(&u, &f4).abs() < 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn vanishes_outside_acceleration() {
        let tr = traj();
        for t in [-2.1, -2.0, -1.0, -0.5, 0.0] {
            assert_eq!(coordinate_force(&tr.kinematics(t).unwrap(), 1.0), Vector3::zeros());
        }
    }

    #[test]
    fn self_product_identity() {
        let tr = traj();
        let k = tr.kinematics(-1.4).unwrap();
        let w1 = proper_acceleration(&k);
        let va = k.v.dot(&k.a);
        let g = k.gamma;
        let expect = -g.powi(4) * (k.a.norm_squared() + g * g * va * va);
        assert!((minkowski(&w1, &w1) - expect).abs() < 1e-14 * expect.abs());
    }
}

//! Finite-`ℏ` mode functions of a time-dependent potential and the quantum
//! emission amplitude built from them.
//!
//! `φ_p(t)` solves `ℏ²φ'' + σ_p(t)²φ = 0` with `σ_p² = (p - V(t))² + m²`,
//! normalised to `e^{-ip₀t/ℏ}` once the potential has switched off. Only the
//! transition region is integrated numerically; outside it the solution is a
//! combination of plane waves.

use nalgebra::Vector3;
use num_complex::Complex64;

use super::amplitude::EmissionAmplitude;
use super::window::CutoffWindow;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::ode::{integrate, DenseOutput, OdeOptions};
use crate::potentials::{Axis, PotentialProfile};

/// Uniform time grid `t_j = t_start + j dt`, `j < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeGrid {
    pub t_start: f64,
    pub dt: f64,
    pub len: usize,
}

impl ModeGrid {
    pub fn t(&self, j: usize) -> f64 {
        self.t_start + j as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.len - 1)
    }

    /// Grid covering the `t`-image of the whole window for every direction,
    /// with `points_per_period` samples per oscillation at the largest `σ`.
    pub fn covering(traj: &Trajectory, window: &CutoffWindow, hbar: f64, points_per_period: f64) -> ModeGrid {
        let (lo, hi) = window.support();
        let mut a = lo - 1.0;
        while a + traj.extended_kinematics(a).x.norm() >= lo {
            a -= 1.0;
        }
        let mut b = hi + 1.0;
        while b - traj.extended_kinematics(b).x.norm() <= hi {
            b += 1.0;
        }
        let smax = sigma_max(&traj.profile, traj.mass, &traj.p_final);
        let dt = 2.0 * std::f64::consts::PI * hbar / (smax * points_per_period);
        let len = ((b - a) / dt).ceil() as usize + 1;
        ModeGrid { t_start: a, dt, len }
    }
}

/// `σ_p(t)² = (p - V(t))² + m²` for canonical momentum `p`.
pub fn sigma_squared(profile: &PotentialProfile, mass: f64, p: &Vector3<f64>, t: f64) -> f64 {
    let v = profile.value(t);
    (p - Vector3::new(v[1], v[2], v[3])).norm_squared() + mass * mass
}

fn sigma_max(profile: &PotentialProfile, mass: f64, p: &Vector3<f64>) -> f64 {
    let (a, b) = profile.support();
    (0..=256).map(|i| sigma_squared(profile, mass, p, a + (b - a) * i as f64 / 256.0)).fold(0.0, f64::max).sqrt()
}

/// Sampled mode function.
#[derive(Debug, Clone)]
pub struct ModeFunction {
    pub p: Vector3<f64>,
    pub hbar: f64,
    pub mass: f64,
    pub grid: ModeGrid,
    pub values: Vec<Complex64>,
    pub derivatives: Vec<Complex64>,
}

impl ModeFunction {
    pub fn energy(&self) -> f64 {
        (self.p.norm_squared() + self.mass * self.mass).sqrt()
    }

    /// `iℏ(φ*φ' - φ*'φ)` at grid point `j` (constant, equal to `2p₀`).
    pub fn wronskian(&self, j: usize) -> f64 {
        let z = self.values[j].conj() * self.derivatives[j] - self.derivatives[j].conj() * self.values[j];
        (Complex64::new(0.0, self.hbar) * z).re
    }
}

/// Solve for `φ_p` on `grid`. Requires a time-axis profile.
pub fn solve_mode_function(
    profile: &PotentialProfile,
    mass: f64,
    p: Vector3<f64>,
    hbar: f64,
    grid: &ModeGrid,
) -> Result<ModeFunction> {
    if profile.axis != Axis::Time {
        return Err(Error::Config("mode functions need a time-dependent potential".into()));
    }
    if !(hbar > 0.0) || grid.len < 2 || !(grid.dt > 0.0) {
        return Err(Error::Config(format!("invalid hbar {hbar} or grid {grid:?}")));
    }
    let smax = sigma_max(profile, mass, &p);
    let ppp = 2.0 * std::f64::consts::PI * hbar / (smax * grid.dt);
    if ppp < 20.0 {
        return Err(Error::Resolution(format!(
            "grid spacing {} gives {ppp:.1} points per period at hbar = {hbar}; need at least 20",
            grid.dt
        )));
    }
    let p0 = (p.norm_squared() + mass * mass).sqrt();
    let (ta, tb) = profile.support();
    let free = |t: f64| {
        let ph = Complex64::from_polar(1.0, -p0 * t / hbar);
        (ph, ph * Complex64::new(0.0, -p0 / hbar))
    };
    // State (Re φ, Im φ, Re φ', Im φ') integrated backward across the transition.
    let dense: Option<DenseOutput> = if tb > ta {
        let (f0, d0) = free(tb);
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            let s = sigma_squared(profile, mass, &p, t) / (hbar * hbar);
            dy[0] = y[2];
            dy[1] = y[3];
            dy[2] = -s * y[0];
            dy[3] = -s * y[1];
        };
        let opts = OdeOptions::new(1e-13).with_atol(1e-14);
        Some(integrate(rhs, tb, &[f0.re, f0.im, d0.re, d0.im], ta, &opts, None)?)
    } else {
        None
    };
    // Past plane waves matched at t = ta.
    let s0 = sigma_squared(profile, mass, &p, ta - 1.0).sqrt();
    let (fa, da) = match &dense {
        Some(d) => {
            let y = d.last_state();
            (Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3]))
        }
        None => free(ta),
    };
    let diff = da * Complex64::new(0.0, hbar / s0);
    let alpha = (fa + diff) * 0.5;
    let beta = (fa - diff) * 0.5;
    let mut values = Vec::with_capacity(grid.len);
    let mut derivatives = Vec::with_capacity(grid.len);
    let mut y = [0.0; 4];
    for j in 0..grid.len {
        let t = grid.t(j);
        let (f, d) = if t >= tb {
            free(t)
        } else if t <= ta {
            let e = Complex64::from_polar(1.0, -s0 * (t - ta) / hbar);
            let w = Complex64::new(0.0, s0 / hbar);
            (alpha * e + beta / e, -w * alpha * e + w * beta / e)
        } else {
            dense.as_ref().expect("transition region").eval_into(t, &mut y);
            (Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3]))
        };
        values.push(f);
        derivatives.push(d);
    }
    Ok(ModeFunction { p, hbar, mass, grid: *grid, values, derivatives })
}

/// Quantum amplitude for emitting a photon `k n` from mode `p` into mode
/// `P = p - ℏk n`:
///
/// ```text
/// 𝒜^i = -e ∫dt e^{ikt} φ_P* φ_p (p^i - V^i(t))/p₀ χ
/// 𝒜⁰ = -(ieℏ/2p₀) ∫dt (φ_P* ∂_tφ_p - ∂_tφ_P* φ_p) e^{ikt} χ
/// ```
///
/// with the window evaluated on the classical light-front time `t - n·x(t)`.
pub fn amplitude_quantum(
    final_mode: &ModeFunction,
    initial_mode: &ModeFunction,
    k: f64,
    n: &Vector3<f64>,
    profile: &PotentialProfile,
    traj: &Trajectory,
    window: &CutoffWindow,
    charge: f64,
) -> Result<EmissionAmplitude> {
    let (fm, im) = (final_mode, initial_mode);
    if fm.grid != im.grid || fm.hbar != im.hbar {
        return Err(Error::Config("mode functions were solved on different grids".into()));
    }
    let n = n.normalize();
    let expect = im.p - n * (im.hbar * k);
    if (fm.p - expect).norm() > 1e-12 * (1.0 + im.p.norm()) {
        return Err(Error::Config(format!("final momentum {:?} is not p - ħk = {:?}", fm.p, expect)));
    }
    let lf = super::amplitude::LightFront::new(traj, n)?;
    if !window.covers(lf.xi1, lf.xi2) {
        return Err(Error::Window("plateau does not cover the acceleration interval".into()));
    }
    let grid = im.grid;
    let xi = |t: f64| t - n.dot(&traj.extended_kinematics(t).x);
    if window.value(xi(grid.t_start)) != 0.0 || window.value(xi(grid.t_end())) != 0.0 {
        return Err(Error::Window("mode grid does not cover the window".into()));
    }
    let p0 = im.energy();
    let hbar = im.hbar;
    let mut a = [Complex64::new(0.0, 0.0); 4];
    for j in 0..grid.len {
        let t = grid.t(j);
        let chi = window.value(xi(t));
        if chi == 0.0 {
            continue;
        }
        let e = Complex64::from_polar(chi * grid.dt, k * t);
        let prod = fm.values[j].conj() * im.values[j] * e;
        let v = profile.value(t);
        for i in 0..3 {
            a[i + 1] += prod * (im.p[i] - v[i + 1]);
        }
        let cur = fm.values[j].conj() * im.derivatives[j] - fm.derivatives[j].conj() * im.values[j];
        a[0] += cur * e;
    }
    for z in &mut a[1..] {
        *z *= -charge / p0;
    }
    a[0] *= Complex64::new(0.0, -charge * hbar / (2.0 * p0));
    Ok(EmissionAmplitude { p: im.p.into(), k, n: n.into(), a })
}

/// `max |(|φ|² σ/p₀) - 1|` over grid points in `[a, b]`.
pub fn wkb_deviation(mode: &ModeFunction, profile: &PotentialProfile, a: f64, b: f64) -> f64 {
    let p0 = mode.energy();
    (0..mode.grid.len)
        .filter(|&j| (a..=b).contains(&mode.grid.t(j)))
        .map(|j| {
            let s = sigma_squared(profile, mode.mass, &mode.p, mode.grid.t(j)).sqrt();
            (mode.values[j].norm_sqr() * s / p0 - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest `|arg(φ_P* φ_p) + k n·x(t)|` over the acceleration interval, with
/// the phase unwrapped from `t = 0` backwards.
pub fn phase_product_drift(final_mode: &ModeFunction, initial_mode: &ModeFunction, k: f64, n: &Vector3<f64>, traj: &Trajectory) -> f64 {
    let g = initial_mode.grid;
    let j0 = ((0.0 - g.t_start) / g.dt).round().clamp(0.0, (g.len - 1) as f64) as usize;
    let z = |j: usize| final_mode.values[j].conj() * initial_mode.values[j];
    let mut phase = z(j0).arg();
    let mut prev = z(j0);
    let mut worst: f64 = 0.0;
    for j in (0..j0).rev() {
        let t = g.t(j);
        if t < traj.t1 {
            break;
        }
        let cur = z(j);
        phase += (cur * prev.conj()).arg();
        prev = cur;
        if t <= traj.t2 {
            let x = traj.kinematics(t).map(|kin| kin.x).unwrap_or_else(|_| traj.extended_kinematics(t).x);
            worst = worst.max((phase + k * n.dot(&x)).abs());
        }
    }
    worst
}

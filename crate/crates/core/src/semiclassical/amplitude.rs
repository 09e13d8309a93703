//! Classical emission amplitude `𝒜^μ = -e ∫ dξ (dx^μ/dξ) χ(ξ) e^{ikξ}`.
//!
//! Outside the acceleration interval `dx^μ/dξ = u^μ/ξ̇` is constant, so the
//! transform splits into closed-form plateau pieces, the two tapers and an
//! oscillatory integral over the acceleration interval done in `t`.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::Serialize;

use super::window::{plateau_transform, CutoffWindow};
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

pub type Amplitude4 = [Complex64; 4];

/// One emission amplitude, four-vector index 0 is time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EmissionAmplitude {
    pub p: [f64; 3],
    pub k: f64,
    pub n: [f64; 3],
    #[serde(serialize_with = "ser_amp")]
    pub a: Amplitude4,
}

fn ser_amp<S: serde::Serializer>(a: &Amplitude4, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(4))?;
    for z in a {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// `a·b*` with signature (+,-,-,-).
pub fn minkowski_c(a: &Amplitude4, b: &Amplitude4) -> Complex64 {
    a[0] * b[0].conj() - a[1] * b[1].conj() - a[2] * b[2].conj() - a[3] * b[3].conj()
}

/// Light-front data of a trajectory for one photon direction.
#[derive(Debug, Clone)]
pub struct LightFront<'a> {
    pub traj: &'a Trajectory,
    pub n: Vector3<f64>,
    /// `dx^μ/dξ` before and after the acceleration.
    pub c_past: [f64; 4],
    pub c_fut: [f64; 4],
    pub xi1: f64,
    pub xi2: f64,
}

fn tangent(v: &Vector3<f64>, n: &Vector3<f64>) -> [f64; 4] {
    let d = 1.0 - n.dot(v);
    [1.0 / d, v.x / d, v.y / d, v.z / d]
}

impl<'a> LightFront<'a> {
    pub fn new(traj: &'a Trajectory, n: Vector3<f64>) -> Result<Self> {
        let k1 = traj.kinematics(traj.t1)?;
        let k2 = traj.kinematics(traj.t2)?;
        Ok(LightFront {
            traj,
            n,
            c_past: tangent(&k1.v, &n),
            c_fut: tangent(&k2.v, &n),
            xi1: traj.t1 - n.dot(&k1.x),
            xi2: traj.t2 - n.dot(&k2.x),
        })
    }

    pub fn xi(&self, t: f64) -> f64 {
        t - self.n.dot(&self.traj.extended_kinematics(t).x)
    }

    /// Invert `ξ(t)` on the acceleration interval (ξ is strictly increasing).
    pub fn t_of_xi(&self, target: f64) -> Result<f64> {
        let (mut lo, mut hi) = (self.traj.t1, self.traj.t2);
        if target <= self.xi1 {
            return Ok(lo);
        }
        if target >= self.xi2 {
            return Ok(hi);
        }
        let mut t = lo + (hi - lo) * (target - self.xi1) / (self.xi2 - self.xi1);
        for _ in 0..60 {
            let k = self.traj.kinematics(t)?;
            let f = t - self.n.dot(&k.x) - target;
            if f.abs() <= 1e-15 * (1.0 + target.abs()) {
                return Ok(t);
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let step = f / (1.0 - self.n.dot(&k.v));
            let next = t - step;
            t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if (hi - lo) < 1e-15 * (1.0 + t.abs()) || step.abs() < 1e-16 * (1.0 + t.abs()) {
                return Ok(t);
            }
        }
        Ok(t)
    }

    /// Nodes `(ξ_j, W_j h_j)` such that `Σ_j W_j h_j e^{ikξ_j}` is the
    /// acceleration part of `∫ (d²x^μ/dξ²) e^{ikξ} dξ` for `|k| ≤ k_max`.
    pub fn acceleration_nodes(&self, k_max: f64, gl: &GaussLegendre, oscillations: f64) -> Result<Vec<(f64, [f64; 4])>> {
        let span = self.xi2 - self.xi1;
        if span <= 0.0 {
            return Ok(Vec::new());
        }
        let panels = ((k_max * span / (2.0 * std::f64::consts::PI * oscillations)).ceil() as usize).max(self.min_panels());
        let mut bounds = Vec::with_capacity(panels + 1);
        bounds.push(self.traj.t1);
        for p in 1..panels {
            bounds.push(self.t_of_xi(self.xi1 + span * p as f64 / panels as f64)?);
        }
        bounds.push(self.traj.t2);
        let mut out = Vec::with_capacity(panels * gl.len());
        for w in bounds.windows(2) {
            for (t, wt) in gl.on(w[0], w[1]) {
                let k = self.traj.kinematics(t)?;
                let xid = 1.0 - self.n.dot(&k.v);
                let na = self.n.dot(&k.a);
                let s = wt / (xid * xid);
                out.push((
                    t - self.n.dot(&k.x),
                    [na * s, (xid * k.a.x + na * k.v.x) * s, (xid * k.a.y + na * k.v.y) * s, (xid * k.a.z + na * k.v.z) * s],
                ));
            }
        }
        Ok(out)
    }

    /// Fewest ξ-panels over the acceleration interval: eight per feature of
    /// the potential (each pulse of a train counts separately).
    fn min_panels(&self) -> usize {
        let prof = &self.traj.profile;
        let features = if prof.bump.iter().any(|&b| b != 0.0) { (prof.pulses as f64 / prof.duty).ceil() as usize } else { 1 };
        8 * features
    }

    fn check_window(&self, window: &CutoffWindow) -> Result<()> {
        if !window.covers(self.xi1, self.xi2) {
            return Err(Error::Window(format!(
                "plateau [{}, {}] does not cover the acceleration image [{}, {}]",
                window.xi_on, window.xi_off, self.xi1, self.xi2
            )));
        }
        Ok(())
    }
}

/// `Σ_j h_j e^{i k_m ξ_j}` for `k_m = k0 + m dk`, `m < out.len()`, added into
/// `out`. Phases advance by recurrence from a fresh `sincos` per node.
pub fn accumulate_vector(nodes: &[(f64, [f64; 4])], k0: f64, dk: f64, out: &mut [Amplitude4]) {
    for &(xi, h) in nodes {
        let mut e = Complex64::from_polar(1.0, k0 * xi);
        let r = Complex64::from_polar(1.0, dk * xi);
        for o in out.iter_mut() {
            for mu in 0..4 {
                o[mu] += e * h[mu];
            }
            e *= r;
        }
    }
}

pub fn accumulate_scalar(nodes: &[(f64, f64)], k0: f64, dk: f64, out: &mut [Complex64]) {
    for &(xi, h) in nodes {
        let mut e = Complex64::from_polar(1.0, k0 * xi);
        let r = Complex64::from_polar(1.0, dk * xi);
        for o in out.iter_mut() {
            *o += e * h;
            e *= r;
        }
    }
}

/// `∫ (dx^μ/dξ) χ(ξ) e^{ikξ} dξ` for any real `k`.
pub fn current_transform(lf: &LightFront, k: f64, window: &CutoffWindow) -> Result<Amplitude4> {
    lf.check_window(window)?;
    let gl = GaussLegendre::new(16);
    let traj = lf.traj;
    // Constant-velocity parts: tapers plus plateau up to the acceleration.
    let lo = window.support().0;
    let panels = ((k.abs() * window.width / std::f64::consts::PI).ceil() as usize).max(2);
    let h = window.width / panels as f64;
    let mut rise = Complex64::new(0.0, 0.0);
    let mut fall = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        for (x, w) in gl.on(lo + p as f64 * h, lo + (p + 1) as f64 * h) {
            rise += Complex64::from_polar(w * window.value(x), k * x);
        }
        let a = window.xi_off + p as f64 * h;
        for (x, w) in gl.on(a, a + h) {
            fall += Complex64::from_polar(w * window.value(x), k * x);
        }
    }
    let before = rise + plateau_transform(k, window.xi_on, lf.xi1);
    let after = fall + plateau_transform(k, lf.xi2, window.xi_off);
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for mu in 0..4 {
        out[mu] = before * lf.c_past[mu] + after * lf.c_fut[mu];
    }
    // Acceleration interval, in t with panels uniform in ξ.
    let span = lf.xi2 - lf.xi1;
    if span > 0.0 {
        let np = ((k.abs() * span / std::f64::consts::PI).ceil() as usize).max(lf.min_panels());
        let mut tb = vec![traj.t1];
        for p in 1..np {
            tb.push(lf.t_of_xi(lf.xi1 + span * p as f64 / np as f64)?);
        }
        tb.push(traj.t2);
        for w in tb.windows(2) {
            for (t, wt) in gl.on(w[0], w[1]) {
                let kin = traj.kinematics(t)?;
                let e = Complex64::from_polar(wt, k * (t - lf.n.dot(&kin.x)));
                out[0] += e;
                for i in 0..3 {
                    out[i + 1] += e * kin.v[i];
                }
            }
        }
    }
    Ok(out)
}

/// `∫ (d²x^μ/dξ²) χ e^{ikξ} + (dx^μ/dξ) χ' e^{ikξ}`: the transform of
/// `d/dξ[(dx^μ/dξ) χ]`, equal to `-ik` times [`current_transform`].
pub fn derivative_transform(lf: &LightFront, k: f64, window: &CutoffWindow) -> Result<Amplitude4> {
    lf.check_window(window)?;
    let gl = GaussLegendre::new(16);
    let (rise, fall) = window.taper_nodes(k.abs(), &gl, 1.0);
    let mut xr = [Complex64::new(0.0, 0.0)];
    let mut xf = [Complex64::new(0.0, 0.0)];
    accumulate_scalar(&rise, k, 0.0, &mut xr);
    accumulate_scalar(&fall, k, 0.0, &mut xf);
    let mut out = [[Complex64::new(0.0, 0.0); 4]];
    accumulate_vector(&lf.acceleration_nodes(k.abs(), &gl, 1.0)?, k, 0.0, &mut out);
    let mut g = out[0];
    for mu in 0..4 {
        g[mu] += xr[0] * lf.c_past[mu] + xf[0] * lf.c_fut[mu];
    }
    Ok(g)
}

/// `𝒜^μ(k n) = -e ∫ dξ (dx^μ/dξ) χ(ξ) e^{ikξ}` for a charge `e`.
pub fn amplitude_classical(
    traj: &Trajectory,
    k: f64,
    n: &Vector3<f64>,
    window: &CutoffWindow,
    charge: f64,
) -> Result<EmissionAmplitude> {
    let lf = LightFront::new(traj, n.normalize())?;
    let g = current_transform(&lf, k, window)?;
    Ok(EmissionAmplitude {
        p: traj.p_final.into(),
        k,
        n: lf.n.into(),
        a: g.map(|z| z * -charge),
    })
}

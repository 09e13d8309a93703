//! Smooth cut-off `χ(ξ)` in light-front time.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::potentials::TransitionShape;
use crate::quadrature::GaussLegendre;

/// `χ = 1` on `[xi_on, xi_off]`, falling to zero over `width` on either side
/// with the septic smoothstep (C³ everywhere).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffWindow {
    pub xi_on: f64,
    pub xi_off: f64,
    pub width: f64,
}

const SHAPE: TransitionShape = TransitionShape::Smoothstep7;

impl CutoffWindow {
    pub fn new(xi_on: f64, xi_off: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !(xi_off >= xi_on) || !xi_on.is_finite() || !xi_off.is_finite() {
            return Err(Error::Window(format!(
                "need xi_on <= xi_off and width > 0, got [{xi_on}, {xi_off}] with width {width}"
            )));
        }
        Ok(CutoffWindow { xi_on, xi_off, width })
    }

    /// Window whose plateau covers the light-front image of the acceleration
    /// interval for every direction, padded by `pad` on both sides.
    pub fn for_trajectory(traj: &Trajectory, width: f64, pad: f64) -> Result<Self> {
        let x1 = traj.kinematics(traj.t1)?.x.norm();
        let x2 = traj.kinematics(traj.t2)?.x.norm();
        CutoffWindow::new(traj.t1 - x1 - pad, traj.t2 + x2 + pad, width)
    }

    /// The default policy: taper width half the acceleration duration (at
    /// least 0.05), plateau padded by one taper width.
    pub fn default_for(traj: &Trajectory) -> Result<Self> {
        let w = (0.5 * traj.duration()).max(0.05);
        CutoffWindow::for_trajectory(traj, w, w)
    }

    /// `[ξ_on - w, ξ_off + w]`.
    pub fn support(&self) -> (f64, f64) {
        (self.xi_on - self.width, self.xi_off + self.width)
    }

    pub fn span(&self) -> f64 {
        self.xi_off - self.xi_on + 2.0 * self.width
    }

    pub fn value(&self, xi: f64) -> f64 {
        let (lo, hi) = self.support();
        if xi <= lo || xi >= hi {
            0.0
        } else if xi < self.xi_on {
            SHAPE.step((xi - lo) / self.width)[0]
        } else if xi > self.xi_off {
            SHAPE.step((hi - xi) / self.width)[0]
        } else {
            1.0
        }
    }

    pub fn derivative(&self, xi: f64) -> f64 {
        let (lo, hi) = self.support();
        if xi <= lo || xi >= hi {
            0.0
        } else if xi < self.xi_on {
            SHAPE.step((xi - lo) / self.width)[1] / self.width
        } else if xi > self.xi_off {
            -SHAPE.step((hi - xi) / self.width)[1] / self.width
        } else {
            0.0
        }
    }

    /// Whether the plateau contains `[a, b]`.
    pub fn covers(&self, a: f64, b: f64) -> bool {
        self.xi_on <= a && b <= self.xi_off
    }

    /// Quadrature nodes `(ξ, w·χ'(ξ))` on the rising and falling tapers,
    /// fine enough for `|k| ≤ k_max`.
    pub fn taper_nodes(&self, k_max: f64, gl: &GaussLegendre, oscillations: f64) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
        let panels = ((k_max * self.width / (2.0 * std::f64::consts::PI * oscillations)).ceil() as usize).max(2);
        let lo = self.support().0;
        let mut rise = Vec::with_capacity(panels * gl.len());
        let mut fall = Vec::with_capacity(panels * gl.len());
        let h = self.width / panels as f64;
        for p in 0..panels {
            let a = lo + p as f64 * h;
            for (x, w) in gl.on(a, a + h) {
                rise.push((x, w * self.derivative(x)));
            }
            let a = self.xi_off + p as f64 * h;
            for (x, w) in gl.on(a, a + h) {
                fall.push((x, w * self.derivative(x)));
            }
        }
        (rise, fall)
    }

    /// `∫ χ(ξ) e^{iqξ} dξ`.
    pub fn transform(&self, q: f64) -> Complex64 {
        let gl = GaussLegendre::new(16);
        let lo = self.support().0;
        let panels = ((q.abs() * self.width / std::f64::consts::PI).ceil() as usize).max(2);
        let h = self.width / panels as f64;
        let mut acc = plateau_transform(q, self.xi_on, self.xi_off);
        for p in 0..panels {
            for a in [lo + p as f64 * h, self.xi_off + p as f64 * h] {
                for (x, w) in gl.on(a, a + h) {
                    acc += Complex64::from_polar(w * self.value(x), q * x);
                }
            }
        }
        acc
    }
}

/// `∫_a^b e^{iqξ} dξ`, stable as `q → 0`.
pub fn plateau_transform(q: f64, a: f64, b: f64) -> Complex64 {
    let d = b - a;
    let th = q * d;
    let (re, im) = if th.abs() < 1e-6 {
        (1.0 - th * th / 6.0, th / 2.0 - th * th * th / 24.0)
    } else {
        let s = (0.5 * th).sin();
        (th.sin() / th, 2.0 * s * s / th)
    };
    Complex64::from_polar(1.0, q * a) * Complex64::new(re, im) * d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_shape() {
        let w = CutoffWindow::new(-1.0, 2.0, 0.5).unwrap();
        assert_eq!(w.value(0.0), 1.0);
        assert_eq!(w.value(-1.5), 0.0);
        assert_eq!(w.value(2.5), 0.0);
        assert!((w.value(-1.25) - 0.5).abs() < 1e-14);
        assert!((w.value(2.25) - 0.5).abs() < 1e-14);
        // χ' integrates to +1 on the rise and -1 on the fall.
        let gl = GaussLegendre::new(16);
        let (r, f) = w.taper_nodes(1.0, &gl, 1.0);
        assert!((r.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((f.iter().map(|x| x.1).sum::<f64>() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn transform_at_zero_is_area() {
        let w = CutoffWindow::new(-1.0, 2.0, 0.5).unwrap();
        let t = w.transform(0.0);
        assert!((t.re - 3.5).abs() < 1e-13 && t.im.abs() < 1e-15);
        let q = 3.7;
        let brute: Complex64 = (0..200_000)
            .map(|i| {
                let x = -1.5 + 4.0 * (i as f64 + 0.5) / 200_000.0;
                Complex64::from_polar(w.value(x), q * x) * (4.0 / 200_000.0)
            })
            .sum();
        assert!((w.transform(q) - brute).norm() < 1e-9);
    }

    #[test]
    fn plateau_transform_small_argument() {
        let a = plateau_transform(1e-9, 0.3, 1.3);
        assert!((a - Complex64::new(1.0, 0.8e-9)).norm() < 1e-15);
    }
}

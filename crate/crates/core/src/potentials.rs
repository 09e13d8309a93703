//! Localised four-potentials `V^μ(s)` along a single coordinate.
//!
//! The potential is exactly `v_past` for `s ≤ -x1`, exactly zero for
//! `s ≥ -x2`, and interpolates with a C³ transition in between. The charge is
//! absorbed into `V`, so the mechanical momentum is `p = P - V` (spatial).
//!
//! On top of the step an optional pulse train can be added: `pulses`
//! identical bumps of peak `bump` occupying a fraction `duty` of equal
//! sub-intervals. A pure pulse train (zero `v_past`) kicks the particle and
//! returns it to its original velocity.

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type FourVector = Vector4<f64>;

/// Which coordinate the potential depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// `V(t)`: spatially uniform, time-dependent.
    Time,
    /// `V(z)`: static, varying along z.
    Z,
}

/// Interpolating profile of the transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionShape {
    /// Septic smoothstep `35u⁴ - 84u⁵ + 70u⁶ - 20u⁷`; bump `256 u⁴(1-u)⁴`.
    #[default]
    Smoothstep7,
    /// `u - 2 sin(2πu)/3π + sin(4πu)/12π`; bump `sin⁴(πu)`.
    RaisedCosine,
}

const STEP7: [f64; 8] = [0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0];
const BUMP8: [f64; 9] = [0.0, 0.0, 0.0, 0.0, 256.0, -1024.0, 1536.0, -1024.0, 256.0];

/// Polynomial and its first three derivatives.
fn poly_derivs(c: &[f64], u: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in (k..c.len()).rev() {
            let mut f = 1.0;
            for i in 0..k {
                f *= (j - i) as f64;
            }
            acc = acc * u + f * c[j];
        }
        *o = acc;
    }
    out
}

impl TransitionShape {
    /// Step `S(u)` rising from 0 to 1, with derivatives.
    pub fn step(self, u: f64) -> [f64; 4] {
        use std::f64::consts::PI;
        match self {
            TransitionShape::Smoothstep7 => poly_derivs(&STEP7, u),
            TransitionShape::RaisedCosine => {
                let (s2, c2) = (2.0 * PI * u).sin_cos();
                let (s4, c4) = (4.0 * PI * u).sin_cos();
                [
                    u - 2.0 * s2 / (3.0 * PI) + s4 / (12.0 * PI),
                    1.0 - 4.0 / 3.0 * c2 + c4 / 3.0,
                    8.0 * PI / 3.0 * s2 - 4.0 * PI / 3.0 * s4,
                    16.0 * PI * PI / 3.0 * (c2 - c4),
                ]
            }
        }
    }

    /// Bump `B(u)` with `B(0)=B(1)=0`, peak 1 at `u=1/2`, with derivatives.
    pub fn bump(self, u: f64) -> [f64; 4] {
        use std::f64::consts::PI;
        match self {
            TransitionShape::Smoothstep7 => poly_derivs(&BUMP8, u),
            TransitionShape::RaisedCosine => {
                let (s2, c2) = (2.0 * PI * u).sin_cos();
                let (s4, c4) = (4.0 * PI * u).sin_cos();
                [
                    (3.0 - 4.0 * c2 + c4) / 8.0,
                    PI * s2 - 0.5 * PI * s4,
                    2.0 * PI * PI * (c2 - c4),
                    PI * PI * PI * (-4.0 * s2 + 8.0 * s4),
                ]
            }
        }
    }
}

fn default_pulses() -> usize {
    1
}
fn default_duty() -> f64 {
    1.0
}

/// A localised four-potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialProfile {
    pub axis: Axis,
    /// `V^μ` in the past region, index 0 is the time component.
    pub v_past: [f64; 4],
    /// The transition occupies `-x1 < s < -x2`.
    pub x1: f64,
    pub x2: f64,
    #[serde(default)]
    pub shape: TransitionShape,
    /// Peak amplitude of the optional pulse train.
    #[serde(default)]
    pub bump: [f64; 4],
    #[serde(default = "default_pulses")]
    pub pulses: usize,
    #[serde(default = "default_duty")]
    pub duty: f64,
}

impl PotentialProfile {
    /// Plain step profile without pulses.
    pub fn step(axis: Axis, v_past: [f64; 4], x1: f64, x2: f64, shape: TransitionShape) -> Self {
        PotentialProfile { axis, v_past, x1, x2, shape, bump: [0.0; 4], pulses: 1, duty: 1.0 }
    }

    /// Pure pulse train: no net change of the potential.
    pub fn pulse_train(axis: Axis, bump: [f64; 4], x1: f64, x2: f64, pulses: usize, duty: f64) -> Self {
        PotentialProfile { axis, v_past: [0.0; 4], x1, x2, shape: TransitionShape::Smoothstep7, bump, pulses, duty }
    }

    pub fn v_past(&self) -> FourVector {
        FourVector::from(self.v_past)
    }

    /// `(lo, hi) = (-x1, -x2)`: the interval where the potential varies.
    pub fn support(&self) -> (f64, f64) {
        (-self.x1, -self.x2)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x2
    }

    fn has_bump(&self) -> bool {
        self.bump.iter().any(|&b| b != 0.0)
    }

    /// Pulse train contribution in `u ∈ [0,1]` (derivatives w.r.t. u).
    fn pulse_term(&self, u: f64) -> [f64; 4] {
        let n = self.pulses as f64;
        let j = (u * n).floor().clamp(0.0, n - 1.0);
        let centre = (j + 0.5) / n;
        let half = 0.5 * self.duty / n;
        let w = (u - (centre - half)) / (2.0 * half);
        if !(0.0..=1.0).contains(&w) {
            return [0.0; 4];
        }
        let b = self.shape.bump(w);
        let r = 1.0 / (2.0 * half);
        [b[0], b[1] * r, b[2] * r * r, b[3] * r * r * r]
    }

    /// `[V, dV/ds, d²V/ds², d³V/ds³]`.
    pub fn derivatives(&self, s: f64) -> [FourVector; 4] {
        let zero = FourVector::zeros();
        if s <= -self.x1 {
            return [self.v_past(), zero, zero, zero];
        }
        if s >= -self.x2 {
            return [zero; 4];
        }
        let d = self.width();
        let u = (s + self.x1) / d;
        let st = self.shape.step(u);
        let vp = self.v_past();
        let mut out = [vp * (1.0 - st[0]), -vp * (st[1] / d), -vp * (st[2] / (d * d)), -vp * (st[3] / (d * d * d))];
        if self.has_bump() {
            let b = self.pulse_term(u);
            let bv = FourVector::from(self.bump);
            let mut scale = 1.0;
            for (k, o) in out.iter_mut().enumerate() {
                *o += bv * (b[k] * scale);
                scale /= d;
            }
        }
        out
    }

    pub fn value(&self, s: f64) -> FourVector {
        self.derivatives(s)[0]
    }

    /// Check the profile for consistency.
    pub fn validate(&self) -> Result<()> {
        let finite = self.v_past.iter().chain(&self.bump).all(|x| x.is_finite())
            && self.x1.is_finite()
            && self.x2.is_finite()
            && self.duty.is_finite();
        if !finite {
            return Err(Error::Profile("non-finite parameter".into()));
        }
        if self.x1 <= self.x2 {
            return Err(Error::Profile(format!(
                "degenerate transition region: x1 = {} must exceed x2 = {}",
                self.x1, self.x2
            )));
        }
        if self.x2 < 0.0 {
            return Err(Error::Profile(format!(
                "x2 = {} is negative: the potential must vanish at the origin",
                self.x2
            )));
        }
        if self.axis == Axis::Time && (self.v_past[0] != 0.0 || self.bump[0] != 0.0) {
            return Err(Error::Profile("time component must be gauged away for a time-dependent potential".into()));
        }
        if self.pulses == 0 || !(self.duty > 0.0 && self.duty <= 1.0) {
            return Err(Error::Profile(format!(
                "pulse train needs pulses >= 1 and 0 < duty <= 1 (got {} and {})",
                self.pulses, self.duty
            )));
        }
        // C³ continuity at the joins: inner one-sided derivatives must vanish.
        let (lo, hi) = self.support();
        let mut scale = [0.0f64; 4];
        for i in 1..64 {
            let s = lo + (hi - lo) * i as f64 / 64.0;
            let d = self.derivatives(s);
            for k in 1..4 {
                scale[k] = scale[k].max(d[k].amax());
            }
        }
        let inside = 1e-12 * (hi - lo);
        for (s, label) in [(lo + inside, "past"), (hi - inside, "future")] {
            let d = self.derivatives(s);
            for k in 1..4 {
                if d[k].amax() > 1e-6 * scale[k].max(1e-300) {
                    return Err(Error::Profile(format!("profile is not C³ at the {label} join (derivative {k})")));
                }
            }
        }
        Ok(())
    }
}

/// `V^μ(s)`.
pub fn potential(profile: &PotentialProfile, s: f64) -> FourVector {
    profile.value(s)
}

/// `(V, V', V'', V''')` at `s`.
pub fn potential_derivatives(profile: &PotentialProfile, s: f64) -> [FourVector; 4] {
    profile.derivatives(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PotentialProfile {
        PotentialProfile::step(Axis::Time, [0.0, 0.0, 0.0, 0.3], 2.0, 1.0, TransitionShape::Smoothstep7)
    }

    #[test]
    fn midpoint_value() {
        let v = potential(&sample(), -1.5);
        assert!((v[3] - 0.15).abs() < 1e-14);
    }

    #[test]
    fn constant_regions_are_exact() {
        let p = sample();
        for s in [-1e6, -10.0, -2.0] {
            assert_eq!(p.value(s), p.v_past());
        }
        for s in [-1.0, 0.0, 3.0, 1e9] {
            assert_eq!(p.value(s), FourVector::zeros());
        }
    }

    #[test]
    fn shapes_hit_their_end_values() {
        for shape in [TransitionShape::Smoothstep7, TransitionShape::RaisedCosine] {
            let a = shape.step(0.0);
            let b = shape.step(1.0);
            assert!(a[0].abs() < 1e-15 && (b[0] - 1.0).abs() < 1e-15);
            for k in 1..4 {
                assert!(a[k].abs() < 1e-12 && b[k].abs() < 1e-12, "{shape:?} derivative {k}");
            }
            assert!((shape.step(0.5)[0] - 0.5).abs() < 1e-15);
            assert!((shape.bump(0.5)[0] - 1.0).abs() < 1e-14);
            for k in 0..4 {
                assert!(shape.bump(0.0)[k].abs() < 1e-12 && shape.bump(1.0)[k].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn validation_errors() {
        let mut p = sample();
        p.x2 = 2.0;
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("degenerate transition region"), "{msg}");
        let mut p = sample();
        p.v_past[0] = 0.1;
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("time component must be gauged away"), "{msg}");
        assert!(sample().validate().is_ok());
        let pt = PotentialProfile::pulse_train(Axis::Time, [0.0, 0.2, 0.0, 0.0], 3.0, 0.0, 2, 0.5);
        assert!(pt.validate().is_ok());
    }

    #[test]
    fn pulse_train_is_localised() {
        let p = PotentialProfile::pulse_train(Axis::Z, [0.1, 0.2, 0.0, 0.0], 4.0, 0.0, 2, 0.5);
        // gaps between pulses: u in [0, 0.125), (0.375, 0.625), (0.875, 1]
        assert_eq!(p.value(-4.0 + 0.25), FourVector::zeros());
        assert_eq!(p.value(-2.0), FourVector::zeros());
        assert!((p.value(-4.0 + 1.0)[1] - 0.2).abs() < 1e-14);
        assert!((p.value(-4.0 + 3.0)[0] - 0.1).abs() < 1e-14);
    }
}

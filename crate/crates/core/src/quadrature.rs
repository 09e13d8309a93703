//! Quadrature rules: Gauss–Legendre, adaptive Gauss–Kronrod (7/15) for
//! vector-valued integrands, and product rules on the unit sphere.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (c + r * x, r * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Tolerances for adaptive time quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { rel_tol: 1e-11, abs_tol: 1e-15, max_subdivisions: 2000 }
    }
}

/// One G7/K15 panel for a `dim`-valued integrand; returns the error norm.
fn gk15<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, res: &mut [f64], buf: &mut [f64]) -> f64 {
    let dim = res.len();
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut gauss = vec![0.0; dim];
    f(c, buf);
    for d in 0..dim {
        res[d] = WGK[7] * buf[d];
        gauss[d] = WG[3] * buf[d];
    }
    for j in 0..7 {
        for s in [-1.0, 1.0] {
            f(c + s * r * XGK[j], buf);
            for d in 0..dim {
                res[d] += WGK[j] * buf[d];
                if j % 2 == 1 {
                    gauss[d] += WG[j / 2] * buf[d];
                }
            }
        }
    }
    let mut err: f64 = 0.0;
    for d in 0..dim {
        res[d] *= r;
        err = err.max((res[d] - r * gauss[d]).abs());
    }
    err
}

/// Globally adaptive G7/K15 integration of a vector-valued function over the
/// concatenation of the intervals `[pts[i], pts[i+1]]`.
///
/// Convergence is declared when the summed error estimate drops below
/// `max(abs_tol, rel_tol * |I|_inf)`.
pub fn integrate_adaptive<F>(mut f: F, pts: &[f64], dim: usize, spec: &QuadratureSpec) -> Result<Vec<f64>>
where
    F: FnMut(f64, &mut [f64]),
{
    struct Panel {
        a: f64,
        b: f64,
        val: Vec<f64>,
        err: f64,
    }
    let mut buf = vec![0.0; dim];
    let mut panels: Vec<Panel> = Vec::new();
    for w in pts.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let mut val = vec![0.0; dim];
        let err = gk15(&mut f, w[0], w[1], &mut val, &mut buf);
        panels.push(Panel { a: w[0], b: w[1], val, err });
    }
    let mut total = vec![0.0; dim];
    loop {
        total.iter_mut().for_each(|x| *x = 0.0);
        let mut err_sum = 0.0;
        let mut worst = 0;
        for (i, p) in panels.iter().enumerate() {
            for d in 0..dim {
                total[d] += p.val[d];
            }
            err_sum += p.err;
            if p.err > panels[worst].err {
                worst = i;
            }
        }
        let norm = total.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if panels.is_empty() || err_sum <= spec.abs_tol.max(spec.rel_tol * norm) {
            return Ok(total);
        }
        if panels.len() >= spec.max_subdivisions {
            return Err(Error::Quadrature(format!(
                "{} subdivisions exhausted, error estimate {err_sum:.3e} vs |I| {norm:.3e}",
                panels.len()
            )));
        }
        let p = panels.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        if m <= p.a.min(p.b) || m >= p.a.max(p.b) {
            return Err(Error::Quadrature("interval collapsed below machine resolution".into()));
        }
        for (a, b) in [(p.a, m), (m, p.b)] {
            let mut val = vec![0.0; dim];
            let err = gk15(&mut f, a, b, &mut val, &mut buf);
            panels.push(Panel { a, b, val, err });
        }
    }
}

/// Scalar convenience wrapper around [`integrate_adaptive`].
pub fn integrate_scalar<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_adaptive(|t, out| out[0] = f(t), &[a, b], 1, spec).map(|v| v[0])
}

/// Product rule on the unit sphere: Gauss–Legendre in `cos θ` times the
/// trapezoid rule in azimuth, about an arbitrary polar axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularSpec {
    pub n_polar: usize,
    pub n_azimuth: usize,
}

impl Default for AngularSpec {
    fn default() -> Self {
        AngularSpec { n_polar: 64, n_azimuth: 128 }
    }
}

#[derive(Debug, Clone)]
pub struct SphereRule {
    gl: GaussLegendre,
    n_azimuth: usize,
}

impl SphereRule {
    pub fn new(spec: AngularSpec) -> Self {
        SphereRule { gl: GaussLegendre::new(spec.n_polar), n_azimuth: spec.n_azimuth }
    }

    pub fn len(&self) -> usize {
        self.gl.len() * self.n_azimuth
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Directions and weights (summing to 4π) with the polar axis along
    /// `axis`; a zero axis means `ẑ`.
    pub fn points(&self, axis: &Vector3<f64>) -> Vec<(Vector3<f64>, f64)> {
        let (e1, e2, e3) = orthonormal_frame(axis);
        let dphi = 2.0 * PI / self.n_azimuth as f64;
        let mut pts = Vec::with_capacity(self.len());
        for (&c, &w) in self.gl.nodes.iter().zip(&self.gl.weights) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..self.n_azimuth {
                let phi = (j as f64 + 0.5) * dphi;
                let n = e3 * c + (e1 * phi.cos() + e2 * phi.sin()) * s;
                pts.push((n, w * dphi));
            }
        }
        pts
    }
}

/// Right-handed orthonormal frame whose third vector is `axis/|axis|`.
pub fn orthonormal_frame(axis: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let norm = axis.norm();
    let e3 = if norm > 1e-300 { axis / norm } else { Vector3::z() };
    let trial = if e3.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = (trial - e3 * e3.dot(&trial)).normalize();
    let e2 = e3.cross(&e1);
    (e1, e2, e3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [1, 2, 5, 16, 64] {
            let gl = GaussLegendre::new(n);
            assert!((gl.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got = gl.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn kronrod_constants_are_consistent() {
        // K15 integrates degree 22 exactly, the embedded G7 degree 13.
        let mut res = [0.0];
        let mut buf = [0.0];
        for deg in 0..=22 {
            let mut f = |x: f64, o: &mut [f64]| o[0] = x.powi(deg);
            gk15(&mut f, -1.0, 1.0, &mut res, &mut buf);
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((res[0] - exact).abs() < 1e-14, "deg {deg}");
        }
        let gsum: f64 = 2.0 * WG[..3].iter().sum::<f64>() + WG[3];
        assert!((gsum - 2.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let spec = QuadratureSpec { rel_tol: 1e-12, abs_tol: 0.0, max_subdivisions: 500 };
        let v = integrate_scalar(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, &spec).unwrap();
        let exact = 2.0 * (1.0 / 1e-4f64.sqrt()) * (1.0 / 1e-4f64.sqrt()).atan();
        assert!((v - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn adaptive_reports_failure() {
        let spec = QuadratureSpec { rel_tol: 1e-14, abs_tol: 0.0, max_subdivisions: 4 };
        assert!(integrate_scalar(|x| x.abs().sqrt(), -1.0, 1.0, &spec).is_err());
    }

    #[test]
    fn sphere_rule_integrates_harmonics() {
        let rule = SphereRule::new(AngularSpec { n_polar: 16, n_azimuth: 32 });
        let axis = Vector3::new(0.3, -0.2, 0.9);
        let pts = rule.points(&axis);
        let area: f64 = pts.iter().map(|p| p.1).sum();
        assert!((area - 4.0 * PI).abs() < 1e-12);
        let zz: f64 = pts.iter().map(|(n, w)| w * n.z * n.z).sum();
        assert!((zz - 4.0 * PI / 3.0).abs() < 1e-12);
        let xy: f64 = pts.iter().map(|(n, w)| w * n.x * n.y).sum();
        assert!(xy.abs() < 1e-12);
    }
}

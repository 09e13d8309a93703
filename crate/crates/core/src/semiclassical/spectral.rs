//! Integrals over emitted photons: the amplitude-based shift, the radiated
//! energy and the reduced emission probability.
//!
//! With `ĝ'(k) = ∫ d/dξ[(dx/dξ)χ] e^{ikξ} dξ` (a transform of a function
//! supported on the window, of span `L`), the shift and energy integrands in
//! `k` are even and band-limited to `[-L, L]`. The trapezoid rule with
//! `Δk = π/L` is then exact apart from truncation, and the `k`-grid is
//! extended by octaves until the tail is negligible.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::amplitude::{accumulate_scalar, accumulate_vector, current_transform, minkowski_c, Amplitude4, LightFront};
use super::window::CutoffWindow;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::lorentz_dirac::larmor_power;
use crate::quadrature::{integrate_scalar, AngularSpec, GaussLegendre, QuadratureSpec, SphereRule};

/// Numerical settings of the amplitude route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmplitudeSettings {
    pub angular: AngularSpec,
    /// Taper width; `None` means half the acceleration duration.
    pub window_width: Option<f64>,
    /// Plateau padding beyond the acceleration image; `None` means one width.
    pub plateau_padding: Option<f64>,
    /// Stop adding `k` octaves once one changes the result by less than this.
    pub rel_tol: f64,
    pub max_octaves: usize,
    /// Finite-difference step in momentum, relative to `max(|p|, m)`.
    pub step: f64,
    /// Maximum oscillations of `e^{ikξ}` per Gauss–Legendre panel.
    pub panel_oscillations: f64,
}

impl Default for AmplitudeSettings {
    fn default() -> Self {
        AmplitudeSettings {
            angular: AngularSpec { n_polar: 24, n_azimuth: 48 },
            window_width: None,
            plateau_padding: None,
            rel_tol: 1e-6,
            max_octaves: 14,
            step: 1e-4,
            panel_oscillations: 1.5,
        }
    }
}

impl AmplitudeSettings {
    pub fn window(&self, traj: &Trajectory) -> Result<CutoffWindow> {
        let w = self.window_width.unwrap_or((0.5 * traj.duration()).max(0.05));
        CutoffWindow::for_trajectory(traj, w, self.plateau_padding.unwrap_or(w))
    }
}

const GL_ORDER: usize = 16;

fn mean_axis(traj: &Trajectory) -> Vector3<f64> {
    let (a, b) = traj.asymptotic_velocities();
    (a + b) * 0.5
}

/// Convergence bookkeeping for a sequence of `k` octaves.
struct Octaves {
    dk: f64,
    k0: f64,
    rel_tol: f64,
    max: usize,
}

impl Octaves {
    fn new(window: &CutoffWindow, feature: f64, settings: &AmplitudeSettings) -> Self {
        let dk = PI / window.span();
        let k0 = (8.0 * PI / feature.min(window.width)).max(4.0 * dk);
        Octaves { dk, k0, rel_tol: settings.rel_tol, max: settings.max_octaves }
    }

    /// Index range `[m_lo, m_hi)` of grid points `k = m Δk` in octave `l`,
    /// and the octave's top wave number.
    fn range(&self, l: usize) -> (usize, usize, f64) {
        let top = self.k0 * (1u64 << l) as f64;
        let hi = (top / self.dk).ceil() as usize + 1;
        let lo = if l == 0 { 1 } else { (self.k0 * (1u64 << (l - 1)) as f64 / self.dk).ceil() as usize + 1 };
        (lo, hi, top)
    }
}

/// Result of the amplitude route.
#[derive(Debug, Clone, Serialize)]
pub struct AmplitudeShift {
    pub shift: Vector3<f64>,
    pub window: CutoffWindow,
    pub directions: usize,
    /// Largest wave number reached over all directions.
    pub k_max: f64,
}

/// Build `p ± ε e_i` trajectories and check that `ε` is in the linear regime.
fn momentum_family(traj: &Trajectory, settings: &AmplitudeSettings) -> Result<(f64, Vec<Trajectory>)> {
    let eps = settings.step * traj.p_final.norm().max(traj.mass);
    let mut fam = Vec::with_capacity(6);
    for i in 0..3 {
        for s in [1.0, -1.0] {
            let mut p = traj.p_final;
            p[i] += s * eps;
            fam.push(Trajectory::new(&traj.profile, traj.mass, p, traj.tol)?);
        }
    }
    let t_lo = fam.iter().map(|f| f.t_min).fold(traj.t_min, f64::max);
    for i in 0..3 {
        let (tp, tm) = (&fam[2 * i], &fam[2 * i + 1]);
        for j in 1..=4 {
            let t = t_lo * j as f64 / 4.0;
            let x0 = traj.kinematics(t)?.x;
            let xp = tp.kinematics(t)?.x;
            let xm = tm.kinematics(t)?.x;
            let lin = (xp - xm).norm() / 2.0;
            let quad = (xp + xm - x0 * 2.0).norm() / 2.0;
            if quad > 0.01 * lin + 1e-13 * (1.0 + x0.norm()) {
                return Err(Error::Step(format!(
                    "momentum step {eps:e} is outside the linear regime at t = {t} (quadratic {quad:e} vs linear {lin:e})"
                )));
            }
        }
    }
    Ok((eps, fam))
}

/// `ĝ'` on a stretch of the `k`-grid for one light front, using shared
/// taper sums.
fn derivative_on_grid(
    lf: &LightFront,
    nodes: &[(f64, [f64; 4])],
    rise: &[Complex64],
    fall: &[Complex64],
    k0: f64,
    dk: f64,
) -> Vec<Amplitude4> {
    let mut out = vec![[Complex64::new(0.0, 0.0); 4]; rise.len()];
    accumulate_vector(nodes, k0, dk, &mut out);
    for (m, o) in out.iter_mut().enumerate() {
        for mu in 0..4 {
            o[mu] += rise[m] * lf.c_past[mu] + fall[m] * lf.c_fut[mu];
        }
    }
    out
}

fn taper_sums(window: &CutoffWindow, k_top: f64, osc: f64, k0: f64, dk: f64, len: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let gl = GaussLegendre::new(GL_ORDER);
    let (r, f) = window.taper_nodes(k_top, &gl, osc);
    let mut xr = vec![Complex64::new(0.0, 0.0); len];
    let mut xf = vec![Complex64::new(0.0, 0.0); len];
    accumulate_scalar(&r, k0, dk, &mut xr);
    accumulate_scalar(&f, k0, dk, &mut xf);
    (xr, xf)
}

/// Per-direction `∫_0^∞ dk Im(ĝ'*·∂_i ĝ')/k` and the largest `k` used.
fn shift_direction(
    fam: &[Trajectory],
    eps: f64,
    n: Vector3<f64>,
    window: &CutoffWindow,
    settings: &AmplitudeSettings,
) -> Result<(Vector3<f64>, f64)> {
    let lfs = fam.iter().map(|t| LightFront::new(t, n)).collect::<Result<Vec<_>>>()?;
    for lf in &lfs {
        if !window.covers(lf.xi1, lf.xi2) {
            return Err(Error::Window(format!(
                "plateau [{}, {}] misses the acceleration image [{}, {}] along {:?}",
                window.xi_on, window.xi_off, lf.xi1, lf.xi2, n
            )));
        }
    }
    let feature = lfs.iter().map(|l| l.xi2 - l.xi1).fold(f64::INFINITY, f64::min).max(1e-3 * window.width);
    let oct = Octaves::new(window, feature, settings);
    let gl = GaussLegendre::new(GL_ORDER);
    let osc = settings.panel_oscillations;
    let mut total = Vector3::zeros();
    let mut l1 = Vector3::zeros();
    for l in 0..oct.max {
        let (lo, hi, top) = oct.range(l);
        let k0 = lo as f64 * oct.dk;
        let len = hi - lo;
        let (xr, xf) = taper_sums(window, top, osc, k0, oct.dk, len);
        let mut g = Vec::with_capacity(6);
        for lf in &lfs {
            let nodes = lf.acceleration_nodes(top, &gl, osc)?;
            g.push(derivative_on_grid(lf, &nodes, &xr, &xf, k0, oct.dk));
        }
        let mut part = Vector3::zeros();
        let mut part_abs = Vector3::zeros();
        for m in 0..len {
            let k = (lo + m) as f64 * oct.dk;
            for i in 0..3 {
                // Im(ĝ'*·∂ĝ') from the ± pair: Im(ĝ'₋*·ĝ'₊)/2ε.
                let val = minkowski_c(&g[2 * i][m], &g[2 * i + 1][m]).im / (2.0 * eps * k);
                part[i] += val;
                part_abs[i] += val.abs();
            }
        }
        part *= oct.dk;
        part_abs *= oct.dk;
        total += part;
        l1 += part_abs;
        if l >= 1 && part.norm() <= oct.rel_tol * total.norm().max(l1.norm() * 1e-3) {
            return Ok((total, top));
        }
    }
    Err(Error::Resolution(format!(
        "shift integrand along {n:?} not converged after {} octaves (k up to {:e})",
        oct.max,
        oct.range(oct.max - 1).2
    )))
}

/// Shift at `t = 0` from the emission amplitudes:
/// `δx^i = (α/4π²) ∫dΩ ∫_0^∞ dk Im(ĝ'^μ* ∂_{p_i} ĝ'_μ)/k`.
pub fn shift_from_amplitudes(traj: &Trajectory, alpha_c: f64, settings: &AmplitudeSettings) -> Result<AmplitudeShift> {
    let window = settings.window(traj)?;
    let (eps, fam) = momentum_family(traj, settings)?;
    let rule = SphereRule::new(settings.angular);
    let pts = rule.points(&mean_axis(traj));
    let per: Vec<Result<(Vector3<f64>, f64)>> =
        pts.par_iter().map(|&(n, _)| shift_direction(&fam, eps, n, &window, settings)).collect();
    let mut sum = Vector3::zeros();
    let mut k_max: f64 = 0.0;
    for (r, (_, w)) in per.into_iter().zip(&pts) {
        let (v, k) = r?;
        sum += v * *w;
        k_max = k_max.max(k);
    }
    Ok(AmplitudeShift { shift: sum * (alpha_c / (4.0 * PI * PI)), window, directions: pts.len(), k_max })
}

/// Radiated energy assembled from the amplitudes, with the straight-line
/// window artifact reported separately.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyReport {
    pub total: f64,
    /// `½[E_line(v_past) + E_line(v_future)]`: the taper self-energies.
    pub baseline: f64,
    pub net: f64,
}

/// `E = ∫dΩ ∫ k² dk (-𝒜·𝒜*) / 16π³`, by the exact band-limited trapezoid.
pub fn radiated_energy(traj: &Trajectory, window: &CutoffWindow, alpha_c: f64, settings: &AmplitudeSettings) -> Result<EnergyReport> {
    let rule = SphereRule::new(settings.angular);
    let pts = rule.points(&mean_axis(traj));
    let (vp, vf) = traj.asymptotic_velocities();
    let per: Vec<Result<(f64, f64)>> = pts
        .par_iter()
        .map(|&(n, _)| {
            let lf = LightFront::new(traj, n)?;
            if !window.covers(lf.xi1, lf.xi2) {
                return Err(Error::Window(format!("plateau misses the acceleration image along {n:?}")));
            }
            let oct = Octaves::new(window, (lf.xi2 - lf.xi1).max(1e-3 * window.width), settings);
            let gl = GaussLegendre::new(GL_ORDER);
            let osc = settings.panel_oscillations;
            let line = |v: &Vector3<f64>| {
                let d = 1.0 - n.dot(v);
                -(1.0 - v.norm_squared()) / (d * d)
            };
            let (lp, lfu) = (line(&vp), line(&vf));
            let (mut tot, mut base, mut peak) = (0.0, 0.0, 0.0f64);
            for l in 0..oct.max {
                let (lo, hi, top) = oct.range(l);
                let k0 = lo as f64 * oct.dk;
                let (xr, xf) = taper_sums(window, top, osc, k0, oct.dk, hi - lo);
                let nodes = lf.acceleration_nodes(top, &gl, osc)?;
                let g = derivative_on_grid(&lf, &nodes, &xr, &xf, k0, oct.dk);
                let (mut part, mut part_b, mut oct_peak) = (0.0, 0.0, 0.0f64);
                for m in 0..g.len() {
                    let e = -minkowski_c(&g[m], &g[m]).re;
                    part += e;
                    let s = (xr[m] + xf[m]).norm_sqr();
                    part_b += 0.5 * (lp + lfu) * s;
                    oct_peak = oct_peak.max(e.abs());
                }
                tot += part * oct.dk;
                base += part_b * oct.dk;
                peak = peak.max(oct_peak);
                let tail_small = oct_peak <= 1e-12 * peak || (part * oct.dk).abs() <= oct.rel_tol * 1e-3 * tot.abs();
                if l >= 1 && tail_small {
                    return Ok((tot, base));
                }
            }
            Err(Error::Resolution(format!("energy spectrum along {n:?} has not decayed")))
        })
        .collect();
    let (mut total, mut baseline) = (0.0, 0.0);
    for (r, (_, w)) in per.into_iter().zip(&pts) {
        let (t, b) = r?;
        total += t * w;
        baseline += b * w;
    }
    let scale = 4.0 * PI * alpha_c / (16.0 * PI * PI * PI);
    Ok(EnergyReport { total: total * scale, baseline: baseline * scale, net: (total - baseline) * scale })
}

/// `(2α/3) ∫ γ⁶ [a² - (v×a)²] dt` over the acceleration.
pub fn larmor_energy(traj: &Trajectory, alpha_c: f64, quad: &QuadratureSpec) -> Result<f64> {
    integrate_scalar(|t| larmor_power(&traj.kinematics(t).unwrap(), alpha_c), traj.t1, traj.t2, quad)
}

/// Both evaluations of the reduced emission probability.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbabilityReport {
    /// `∫dΩ ∫ k dk (-ĝ·ĝ*) / 16π³` from the windowed amplitudes.
    pub amplitude_form: f64,
    /// The same from the double light-front integral of `d/dξ[(dx/dξ)χ]`.
    pub double_form: f64,
    /// `½[P̄_line(v_past) + P̄_line(v_future)]`: the window artifact of a
    /// straight line, as for the energy.
    pub baseline: f64,
    /// `amplitude_form - baseline`.
    pub net: f64,
}

/// Reduced probability `P̄ = ∫ d³k/((2π)³2k) ∫dξ∫dξ' (dx/dξ)·(dx/dξ') χχ' e^{ik(ξ'-ξ)}`
/// per unit `e²`. The integrand is not band-limited in the trapezoid sense
/// (it is odd in `k`), so `k` is integrated on Gauss–Legendre panels.
pub fn emission_probability_reduced(traj: &Trajectory, window: &CutoffWindow, settings: &AmplitudeSettings) -> Result<ProbabilityReport> {
    let rule = SphereRule::new(settings.angular);
    let pts = rule.points(&mean_axis(traj));
    let (vp, vf) = traj.asymptotic_velocities();
    let per: Vec<Result<(f64, f64, f64)>> = pts
        .par_iter()
        .map(|&(n, _)| {
            let lf = LightFront::new(traj, n)?;
            let oct = Octaves::new(window, (lf.xi2 - lf.xi1).max(1e-3 * window.width), settings);
            let gl = GaussLegendre::new(GL_ORDER);
            let osc = settings.panel_oscillations;
            let line = |v: &Vector3<f64>| {
                let d = 1.0 - n.dot(v);
                -(1.0 - v.norm_squared()) / (d * d)
            };
            let line_mean = 0.5 * (line(&vp) + line(&vf));
            let (mut single, mut double, mut base) = (0.0, 0.0, 0.0);
            let mut prev_top = 0.0;
            for l in 0..oct.max {
                let top = oct.range(l).2;
                // g' nodes (ξ, weighted 4-vector) for the whole window.
                let mut nodes = lf.acceleration_nodes(top, &gl, osc)?;
                let (r, f) = window.taper_nodes(top, &gl, osc);
                nodes.extend(r.iter().map(|&(x, w)| (x, lf.c_past.map(|c| c * w))));
                nodes.extend(f.iter().map(|&(x, w)| (x, lf.c_fut.map(|c| c * w))));
                // Panels of about two oscillations of the widest phase difference.
                let panels = ((top - prev_top) * window.span() / (4.0 * PI)).ceil().max(1.0) as usize;
                let h = (top - prev_top) / panels as f64;
                let (mut ps, mut pd, mut pb) = (0.0, 0.0, 0.0);
                let mut phases = vec![Complex64::new(0.0, 0.0); nodes.len()];
                for p in 0..panels {
                    let a = prev_top + p as f64 * h;
                    for (k, wk) in gl.on(a, a + h) {
                        let g = current_transform(&lf, k, window)?;
                        ps += wk * k * -minkowski_c(&g, &g).re;
                        pb += wk * k * line_mean * window.transform(k).norm_sqr();
                        for (e, (x, _)) in phases.iter_mut().zip(&nodes) {
                            *e = Complex64::from_polar(1.0, k * x);
                        }
                        // Σ_j Σ_l h_j·h_l cos(k(ξ_l - ξ_j)), pair by pair.
                        let mut acc = 0.0;
                        for (j, (_, hj)) in nodes.iter().enumerate() {
                            let dot_jj = hj[0] * hj[0] - hj[1] * hj[1] - hj[2] * hj[2] - hj[3] * hj[3];
                            acc += dot_jj;
                            let ej = phases[j].conj();
                            for (l, (_, hl)) in nodes.iter().enumerate().skip(j + 1) {
                                let dot = hj[0] * hl[0] - hj[1] * hl[1] - hj[2] * hl[2] - hj[3] * hl[3];
                                acc += 2.0 * dot * (phases[l] * ej).re;
                            }
                        }
                        pd += wk * -acc / k;
                    }
                }
                single += ps;
                double += pd;
                base += pb;
                prev_top = top;
                if l >= 1 && ps.abs() <= oct.rel_tol * single.abs() {
                    return Ok((single, double, base));
                }
            }
            Err(Error::Resolution(format!("probability integrand along {n:?} has not decayed")))
        })
        .collect();
    let (mut s, mut d, mut b) = (0.0, 0.0, 0.0);
    for (r, (_, w)) in per.into_iter().zip(&pts) {
        let (x, y, z) = r?;
        s += x * w;
        d += y * w;
        b += z * w;
    }
    let c = 1.0 / (16.0 * PI * PI * PI);
    Ok(ProbabilityReport { amplitude_form: s * c, double_form: d * c, baseline: b * c, net: (s - b) * c })
}

/// One row of an emission spectrum.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumSample {
    pub k: f64,
    pub n: [f64; 3],
    #[serde(skip)]
    pub a: Amplitude4,
    /// `d²E/dk dΩ = k² |𝒜_⊥|² / 16π³`, with `𝒜_⊥` the part of the spatial
    /// amplitude transverse to `n`. For a conserved current this equals
    /// `k² (-𝒜·𝒜*) / 16π³`; the windowed current is conserved only up to
    /// `k·𝒜 ∝ k χ̂(k)`, and the transverse form stays non-negative.
    pub d2e: f64,
}

/// Classical amplitudes and spectral energy density at the given wave
/// numbers and directions.
pub fn emission_spectrum(
    traj: &Trajectory,
    window: &CutoffWindow,
    alpha_c: f64,
    ks: &[f64],
    directions: &[Vector3<f64>],
) -> Result<Vec<SpectrumSample>> {
    let e = (4.0 * PI * alpha_c).sqrt();
    let mut out = Vec::with_capacity(ks.len() * directions.len());
    for n in directions {
        let lf = LightFront::new(traj, n.normalize())?;
        for &k in ks {
            let g = current_transform(&lf, k, window)?;
            let a = g.map(|z| z * -e);
            let (nx, ny, nz) = (lf.n.x, lf.n.y, lf.n.z);
            let long = a[1] * nx + a[2] * ny + a[3] * nz;
            let perp2 = a[1].norm_sqr() + a[2].norm_sqr() + a[3].norm_sqr() - long.norm_sqr();
            let d2e = k * k * perp2.max(0.0) / (16.0 * PI * PI * PI);
            out.push(SpectrumSample { k, n: lf.n.into(), a, d2e });
        }
    }
    Ok(out)
}

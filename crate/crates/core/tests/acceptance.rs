//! Acceptance gate: one line per criterion, tolerances pinned here.
//!
//! Runs without the libtest harness so the lines show up in plain
//! `cargo test` output. The process fails if any criterion outside
//! `KNOWN_RED` fails; with `ACCEPTANCE_STRICT=1` it fails on any red line.

use std::process::ExitCode;
use std::time::Instant;

use rrshift_core::quadrature::AngularSpec;
use rrshift_core::scenario::Scenario;
use rrshift_core::semiclassical::AmplitudeSettings;
use rrshift_core::verify::*;
use rrshift_core::Result;

/// Criteria that fail with the documented measurement (see the decisions
/// ledger): ℏ-convergence is still pre-asymptotic at ℏ = 0.1.
const KNOWN_RED: [u8; 1] = [7];

const SCENARIOS: [&str; 4] = ["collinear", "oblique", "static", "weak"];

struct Line {
    id: u8,
    pass: bool,
    text: String,
}

fn sc(name: &str) -> Scenario {
    Scenario::standard(name).unwrap()
}

fn worst(values: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    let mut w: f64 = 0.0;
    for v in values {
        let v = v?;
        w = if v.is_nan() { f64::NAN } else { w.max(v) };
    }
    Ok(w)
}

/// Each part is `(label, value, threshold, at_least)`.
fn criterion(id: u8, title: &str, parts: Result<Vec<(&str, f64, f64, bool)>>) -> Line {
    match parts {
        Ok(parts) => {
            let pass = parts.iter().all(|&(_, v, t, ge)| if ge { v >= t } else { v < t });
            let detail: Vec<String> = parts
                .iter()
                .map(|&(l, v, t, ge)| format!("{l} {v:.3e} {} {t:e}", if ge { ">=" } else { "<" }))
                .collect();
            Line { id, pass, text: format!("{title}: {}", detail.join("; ")) }
        }
        Err(e) => Line { id, pass: false, text: format!("{title}: error: {e}") },
    }
}

fn c1() -> Line {
    let parts = (|| {
        let peak = sc("oblique").trajectory()?.peak_speed();
        Ok(vec![
            ("fast", worst(SCENARIOS.map(|n| route_residual(&sc(n), Suite::Fast)))?, 1e-4, false),
            ("full", worst(SCENARIOS.map(|n| route_residual(&sc(n), Suite::Full)))?, 1e-5, false),
            ("|peak v(b) - 0.8|", (peak - 0.8).abs(), 0.05, false),
        ])
    })();
    criterion(1, "classical and quantum shifts agree over scenarios a-d", parts)
}

fn c2() -> Line {
    let parts = (|| Ok(vec![("closed vs 64x128", angular_closed_vs_quadrature(11, 50)?, 1e-10, false), ("ladder", angular_ladder(12, 50)?, 1e-7, false)]))();
    criterion(2, "angular integrals", parts)
}

fn c3() -> Line {
    let parts = (|| {
        let mut c: f64 = 0.0;
        let mut s: f64 = 0.0;
        for n in SCENARIOS {
            let (a, b) = symplectic_checks(&sc(n).trajectory()?, 13)?;
            c = c.max(a);
            s = s.max(b);
        }
        Ok(vec![("product drift", c, 1e-9, false), ("swap 5x5", s, 1e-7, false)])
    })();
    criterion(3, "symplectic structure", parts)
}

fn c4() -> Line {
    let parts = (|| Ok(vec![("max rel", worst(SCENARIOS.map(|n| jacobi_vs_finite_difference(&sc(n).trajectory()?, 1e-5)))?, 1e-5, false)]))();
    criterion(4, "Jacobi fields vs central differences (eps 1e-5, 50 t)", parts)
}

fn c5() -> Line {
    let parts = (|| {
        let (mut a, mut b): (f64, f64) = (0.0, 0.0);
        for n in SCENARIOS {
            let (x, y) = lorentz_dirac_consistency(&sc(n).trajectory()?)?;
            a = a.max(x);
            b = b.max(y);
        }
        Ok(vec![("gamma F - F_LD", a, 1e-8, false), ("u.F_LD", b, 1e-8, false), ("rest limit", lorentz_dirac_rest_limit()?, 1e-8, false)])
    })();
    criterion(5, "Lorentz-Dirac force consistency", parts)
}

fn c6() -> Line {
    let s = AmplitudeSettings::default();
    let parts = (|| Ok(vec![("max rel", worst(SCENARIOS.map(|n| energy_vs_larmor(&sc(n), &s)))?, 1e-3, false)]))();
    criterion(6, "radiated energy minus baseline vs Larmor", parts)
}

fn c7() -> Line {
    let parts = (|| {
        let study = hbar_convergence(&sc("oblique"), &[0.1, 0.05, 0.025])?;
        let last: f64 = study.ratios.iter().flat_map(|r| r[1]).filter(|x| !x.is_nan()).fold(f64::INFINITY, f64::min);
        Ok(vec![("min ratio", study.min_ratio, 1.7, true), ("second halving", last, 1.7, true)])
    })();
    criterion(7, "hbar-convergence of the quantum amplitude, 5 (k, n), per component", parts)
}

fn c8() -> Line {
    let s = AmplitudeSettings::default();
    let parts = (|| {
        let (mut d, mut c): (f64, f64) = (0.0, 0.0);
        for n in SCENARIOS {
            let (x, y) = amplitude_window_checks(&sc(n), &s)?;
            d = d.max(x);
            c = c.max(y);
        }
        Ok(vec![("taper doubling", d, 1e-3, false), ("vs closed form", c, 1e-3, false)])
    })();
    criterion(8, "cutoff independence of the amplitude shift", parts)
}

fn c9() -> Line {
    let s = AmplitudeSettings { angular: AngularSpec { n_polar: 4, n_azimuth: 8 }, ..Default::default() };
    let parts = (|| Ok(vec![("max rel", worst(SCENARIOS.map(|n| probability_parseval(&sc(n), &s).map(|p| p.0)))?, 1e-8, false)]))();
    criterion(9, "emission probability, double vs single form", parts)
}

fn main() -> ExitCode {
    // Ignore libtest flags such as --nocapture or name filters.
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let checks: [fn() -> Line; 9] = [c1, c2, c3, c4, c5, c6, c7, c8, c9];
    let mut unexpected = 0;
    let mut red = 0;
    for f in checks {
        let start = Instant::now();
        let l = f();
        let tag = if l.pass { "PASS" } else { "FAIL" };
        let known = KNOWN_RED.contains(&l.id);
        println!("[{tag}] criterion {}: {} ({:.1} s){}", l.id, l.text, start.elapsed().as_secs_f64(), if !l.pass && known { "  [known red]" } else { "" });
        if !l.pass {
            red += 1;
            if !known || strict {
                unexpected += 1;
            }
        }
        if l.pass && known {
            println!("note: criterion {} now passes; drop it from KNOWN_RED", l.id);
        }
    }
    println!("acceptance: {} of 9 criteria pass, {} red", 9 - red, red);
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

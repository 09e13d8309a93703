use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rrshift_core::scenario::{self, run_scenario, Scenario};
use rrshift_core::semiclassical::emission_spectrum;
use rrshift_core::shift::Route;
use rrshift_core::verify::{hbar_convergence, run_suite, Suite};
use rrshift_core::Error;

#[derive(Parser)]
#[command(name = "rrshift", version, about = "Radiation-reaction position shift of a relativistic charge")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file, or one of the built-in names collinear, oblique, static, weak.
    #[arg(long)]
    scenario: String,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Single-threaded, bit-reproducible mode; timings are omitted from reports.
    #[arg(long)]
    serial: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the shift by every requested route and compare.
    Shift {
        #[command(flatten)]
        common: Common,
        /// Comma-separated routes (direct, green, quantum, quadrature, amplitude), or `all`
        /// for the first four; the amplitude route is slow and must be named explicitly.
        #[arg(long, default_value = "all")]
        routes: String,
    },
    /// Emission amplitudes and spectral energy density on the scenario's k grid.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// File with one direction `nx ny nz` per line.
        #[arg(long)]
        directions: PathBuf,
    },
    /// Radiation-reaction force along the trajectory (CSV).
    ForceProfile {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 401)]
        samples: usize,
    },
    /// Jacobi fields along the trajectory (CSV).
    JacobiDump {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 401)]
        samples: usize,
    },
    /// Quantum-vs-classical amplitude errors under ℏ-halving (JSON).
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Comma-separated ℏ values; defaults to the scenario's list, else 0.1,0.05,0.025.
        #[arg(long)]
        hbars: Option<String>,
    },
    /// Run the verification suite; exit 0 iff every check passes.
    Verify {
        /// `fast` or `full`.
        #[arg(long = "suite", default_value = "fast")]
        suite: String,
        #[arg(long)]
        serial: bool,
    },
}

/// Failure carrying its exit code: 1 for numerical failures, 2 for bad input.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(if e.is_usage() { 2 } else { 1 }, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure(2, msg.into())
}

fn load(name: &str) -> Result<Scenario, Failure> {
    let path = Path::new(name);
    if !path.exists() {
        if let Some(sc) = Scenario::standard(name) {
            return Ok(sc);
        }
    }
    // Anything wrong with the input file is a usage error.
    Scenario::load(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure(1, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| usage(format!("{what}: cannot parse {x:?}"))))
        .collect()
}

fn parse_routes(s: &str) -> Result<Vec<Route>, Failure> {
    if s == "all" {
        return Ok(Route::standard());
    }
    s.split(',').map(|r| Route::parse(r.trim()).ok_or_else(|| usage(format!("unknown route {r:?}")))).collect()
}

fn configure_threads(serial: bool) -> Result<(), Failure> {
    let cap = match std::env::var("RRSHIFT_THREADS") {
        Ok(v) => Some(v.parse::<usize>().ok().filter(|n| *n > 0).ok_or_else(|| usage(format!("RRSHIFT_THREADS: invalid value {v:?}")))?),
        Err(_) => None,
    };
    let threads = if serial { Some(1) } else { cap };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure(1, e.to_string()))?;
    }
    Ok(())
}

fn to_json(v: &impl serde::Serialize) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure(1, e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Shift { common, routes } => {
            configure_threads(common.serial)?;
            let routes = parse_routes(&routes)?;
            let sc = load(&common.scenario)?;
            let (traj, report) = run_scenario(&sc, routes, !common.serial)?;
            let out = common.out.as_deref().or(sc.outputs.report.as_deref());
            emit(out, &to_json(&report)?)?;
            if let Some(p) = &sc.outputs.trajectory_csv {
                emit(Some(p), &scenario::trajectory_csv(&traj, 401)?)?;
            }
            if let Some(p) = &sc.outputs.force_csv {
                emit(Some(p), &scenario::force_profile_csv(&traj, sc.alpha_c(), 401)?)?;
            }
            if let (Some(p), Some(grid)) = (&sc.outputs.spectrum_csv, &sc.spectrum) {
                let w = sc.window(&traj)?;
                let dirs = grid.direction_vectors()?;
                let s = emission_spectrum(&traj, &w, sc.alpha_c(), &grid.values(), &dirs)?;
                emit(Some(p), &scenario::spectrum_csv(&s))?;
            }
            eprintln!(
                "{}: max residual {:.3e} (threshold {:.1e}) {}",
                report.scenario.name,
                report.shift.max_residual,
                report.shift.threshold,
                if report.shift.pass { "PASS" } else { "FAIL" }
            );
            Ok(if report.shift.pass { 0 } else { 1 })
        }
        Command::Spectrum { common, directions } => {
            configure_threads(common.serial)?;
            let sc = load(&common.scenario)?;
            let text = std::fs::read_to_string(&directions).map_err(|e| usage(format!("{}: {e}", directions.display())))?;
            let dirs = scenario::parse_directions(&text)?;
            let grid = sc.spectrum.clone().ok_or_else(|| usage("scenario has no `spectrum` k grid"))?;
            let traj = sc.trajectory()?;
            let w = sc.window(&traj)?;
            let s = emission_spectrum(&traj, &w, sc.alpha_c(), &grid.values(), &dirs)?;
            emit(common.out.as_deref(), &scenario::spectrum_csv(&s))?;
            Ok(0)
        }
        Command::ForceProfile { common, samples } => {
            let sc = load(&common.scenario)?;
            let traj = sc.trajectory()?;
            emit(common.out.as_deref(), &scenario::force_profile_csv(&traj, sc.alpha_c(), samples)?)?;
            Ok(0)
        }
        Command::JacobiDump { common, samples } => {
            let sc = load(&common.scenario)?;
            let traj = sc.trajectory()?;
            emit(common.out.as_deref(), &scenario::jacobi_csv(&traj, samples)?)?;
            Ok(0)
        }
        Command::Convergence { common, hbars } => {
            configure_threads(common.serial)?;
            let sc = load(&common.scenario)?;
            let hbars = match hbars {
                Some(s) => parse_list(&s, "--hbars")?,
                None if !sc.hbars.is_empty() => sc.hbars.clone(),
                None => vec![0.1, 0.05, 0.025],
            };
            if hbars.len() < 2 || hbars.iter().any(|h| !(*h > 0.0)) {
                return Err(usage("--hbars needs at least two positive values"));
            }
            let study = hbar_convergence(&sc, &hbars)?;
            emit(common.out.as_deref(), &to_json(&study)?)?;
            eprintln!("minimum error ratio between successive hbar values: {:.4}", study.min_ratio);
            Ok(0)
        }
        Command::Verify { suite, serial } => {
            let suite = Suite::parse(&suite).ok_or_else(|| usage(format!("unknown suite {suite:?}; expected fast or full")))?;
            configure_threads(serial)?;
            let checks = run_suite(suite);
            for c in &checks {
                let cmp = if c.at_least { ">=" } else { "<" };
                println!(
                    "[{}] {} {:<52} {:>11.3e} {cmp} {:.1e}  ({:.1} s){}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.criterion,
                    c.name,
                    c.value,
                    c.threshold,
                    c.seconds,
                    c.error.as_deref().map(|e| format!("  error: {e}")).unwrap_or_default()
                );
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            println!("{} checks, {} failed", checks.len(), failed);
            Ok(if failed == 0 { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

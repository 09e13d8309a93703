use thiserror::Error;

/// Errors raised by the library.
///
/// The variants are grouped so that the command-line driver can map them to
/// exit codes: configuration problems (`Profile`, `Config`, `Json`) are user
/// errors, everything else is a numerical failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential profile: {0}")]
    Profile(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("particle is reflected by the potential: {0}")]
    Reflected(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("t = {t} lies outside the trajectory domain [{lo}, {hi}]")]
    Range { t: f64, lo: f64, hi: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("finite-difference step too large: {0}")]
    Step(String),

    #[error("cutoff window does not cover the acceleration region: {0}")]
    Window(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Profile(_) | Error::Config(_) | Error::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

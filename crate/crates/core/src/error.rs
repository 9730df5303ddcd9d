use thiserror::Error;

/// Errors raised anywhere in the profile, shooting, evolution or fitting pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("{what} is singular at rho = {rho}")]
    Domain { what: &'static str, rho: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("converged solution has {found} interior extrema, expected excitation index {expected}")]
    WrongIndex { expected: usize, found: usize },

    #[error("rho = {rho} outside sampled range [{min}, {max}]")]
    OutOfRange { rho: f64, min: f64, max: f64 },

    #[error("extension to rho = {requested} exceeds validated range (max {limit})")]
    Accuracy { requested: f64, limit: f64 },

    #[error("integrator failure at t = {t}: {reason}")]
    Integrator { t: f64, reason: String },

    #[error("instability at tau = {tau}: norm grew by factor {factor:.3e} in one step (bound {bound:.3e})")]
    Instability { tau: f64, factor: f64, bound: f64 },

    #[error("grid mismatch: {0} vs {1} points")]
    GridMismatch(usize, usize),

    #[error("degenerate filter: {0}")]
    Degenerate(String),

    #[error("fit window too short: {0}")]
    WindowTooShort(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for the command-line front-end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::OutOfRange { .. } | Error::GridMismatch(..) => 2,
            Error::Io(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

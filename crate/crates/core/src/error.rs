use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Non-finite or out-of-domain numeric input.
    #[error("domain error: {0}")]
    Domain(String),

    /// A state violates a structural invariant (negative density, non-positive temperature, ...).
    #[error("invalid state: {0}")]
    State(String),

    /// Measure support exceeds the configured LP capacity.
    #[error("support of {size} atoms exceeds solver capacity {capacity}")]
    Capacity { size: usize, capacity: usize },

    /// A particle temperature dropped below the step guard during an RK4 stage.
    #[error("temperature guard violated by particle {index} at t = {time}: theta = {theta} <= {guard}")]
    TemperatureGuard {
        index: usize,
        time: f64,
        theta: f64,
        guard: f64,
    },

    /// Hydro solver left the regime where it is trustworthy.
    #[error("hydro solver abort at t = {time}: {reason}")]
    HydroAbort { time: f64, reason: String },

    /// Spectral energy in the top third of modes exceeded the configured fraction.
    #[error("smoothness monitor tripped at t = {time}: fraction {fraction:.3e} > {limit:.3e}; refine the grid")]
    Resolution { time: f64, fraction: f64, limit: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown {registry} `{name}` (available: {available})")]
    UnknownStrategy {
        registry: &'static str,
        name: String,
        available: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// A time march that stopped early, together with everything it produced.
#[derive(Debug)]
pub struct Aborted<T> {
    pub partial: T,
    pub error: Error,
}

impl<T> std::fmt::Display for Aborted<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl<T: std::fmt::Debug> std::error::Error for Aborted<T> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl<T> From<Box<Aborted<T>>> for Error {
    fn from(a: Box<Aborted<T>>) -> Self {
        a.error
    }
}

/// Result of a time march: the full trajectory, or the partial one and the cause.
pub type SimResult<T> = std::result::Result<T, Box<Aborted<T>>>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// True for failures raised while a solver was marching in time, as
    /// opposed to problems with the inputs.
    pub fn is_solver_abort(&self) -> bool {
        matches!(
            self,
            Error::TemperatureGuard { .. } | Error::HydroAbort { .. } | Error::Resolution { .. }
        )
    }
}

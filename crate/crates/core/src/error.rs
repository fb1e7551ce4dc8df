use std::path::PathBuf;

/// Errors raised by the solver and its surrounding tooling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parametric coordinate {0} lies outside the spline domain")]
    Domain(f64),

    /// The physical film thickness `h - f` dropped to zero or below.
    #[error("film thickness lost positivity: h - f = {value:.3e} at ({x:.4}, {y:.4})")]
    PositivityLoss { value: f64, x: f64, y: f64 },

    #[error("linear solver failure: {0}")]
    LinearSolver(String),

    #[error("Newton iteration failed after {iterations} iterations (residual {residual:.3e})")]
    NewtonFailure { iterations: usize, residual: f64 },

    #[error("step rejected {retries} times in a row at t = {time:.6e} (last dt = {dt:.3e})")]
    StepControl { retries: usize, time: f64, dt: f64 },

    #[error("no front crossing found")]
    FrontNotFound,

    #[error("degenerate fit window: {0}")]
    DegenerateFit(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Failures that an adaptive controller may recover from by shrinking the step.
    pub fn is_recoverable(&self) -> bool {
        matches!(self, Error::PositivityLoss { .. } | Error::LinearSolver(_) | Error::NewtonFailure { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

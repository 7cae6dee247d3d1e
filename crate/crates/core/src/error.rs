use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected n = {expected_n}, L = {expected_length}; got n = {actual_n}, L = {actual_length}")]
    GridMismatch {
        expected_n: usize,
        expected_length: f64,
        actual_n: usize,
        actual_length: f64,
    },

    #[error("unsupported exponent p = {0} (supported: 2, 4, 6, inf)")]
    UnsupportedExponent(f64),

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-integrable singularity: {0}")]
    NonIntegrable(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("form is not coercive on this input (h_form = {0})")]
    NotCoercive(f64),

    #[error("bisection bracket failure: {0}")]
    Bracket(String),

    #[error("supremum not attained; use free Q ({0})")]
    SupremumNotAttained(String),

    #[error("potential not admissible: {0}")]
    NotAdmissible(String),

    #[error("optimizer did not converge after {iterations} iterations (last residual {last_residual:.3e})")]
    NotConverged {
        iterations: usize,
        last_residual: f64,
        residual_history: Vec<f64>,
    },

    #[error("missing ground state: {0}")]
    MissingGroundState(String),

    #[error("numerical abort at step {step} (t = {time}): {reason}")]
    Abort { step: usize, time: f64, reason: String },

    #[error(
        "profile is not resolved by the grid (top-band fraction {top_band_fraction:.3e}); \
         the iteration concentrated at the grid scale"
    )]
    UnderResolved { top_band_fraction: f64 },

    #[error("invalid probe window: {0}")]
    Window(String),

    #[error("invalid snapshot {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use thiserror::Error;

/// Unified error type for graph construction, evaluation, and solving.
#[derive(Debug, Error)]
pub enum QgError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown vertex id `{0}`")]
    UnknownVertex(String),

    #[error("unknown edge id `{0}`")]
    UnknownEdge(String),

    #[error("graph is disconnected: vertex `{0}` is unreachable from the base")]
    Disconnected(String),

    #[error("coordinate {coord} lies outside edge `{edge}` (length {len})")]
    CoordOutOfRange { edge: String, coord: f64, len: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("nonlinear solve diverged after {iterations} iterations (last residual {residual:.3e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error(
        "exponential bridge is not monotone for delta = {delta}; choose delta <= 2"
    )]
    BridgeNotMonotone { delta: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QgError>;

use thiserror::Error;

/// Errors raised by the geometry, solution and verification layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("zero vector: euclidean length {0:e} below threshold")]
    ZeroVector(f64),

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("optimizer diverged (best value {best_value}, best iterate {best_iterate:?})")]
    OptimizerDiverged {
        best_value: f64,
        best_iterate: Vec<f64>,
    },

    #[error("no convergence: estimate {estimate}, achieved relative error {achieved:e}")]
    NoConvergence { estimate: f64, achieved: f64 },

    #[error("tolerance not met: value {value}, error estimate {error_estimate:e}")]
    ToleranceNotMet { value: f64, error_estimate: f64 },

    #[error("level {t} lies above the maximum t0 = {t0}")]
    AboveMaximum { t: f64, t0: f64 },

    #[error("degenerate region: |grad u| = {grad_norm:e} at {point:?}")]
    DegenerateRegion { point: Vec<f64>, grad_norm: f64 },

    #[error("root finding failed: {0}")]
    RootFindFailure(String),

    #[error("bad boundary: {0}")]
    BadBoundary(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

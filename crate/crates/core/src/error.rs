use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate body: {0}")]
    DegenerateBody(String),

    #[error("grid mismatch: {left} vs {right} directions")]
    GridMismatch { left: usize, right: usize },

    #[error("Chebyshev-center search did not converge (last iterate {iterate:?}, width {width:e})")]
    OptimizationNonConvergence { iterate: Point, width: f64 },

    #[error("Newton iteration diverged after {iterations} steps (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("level curve lost convexity (radius of curvature {radius:e} at direction {direction}, level {level})")]
    ConvexityLoss {
        radius: f64,
        direction: usize,
        level: usize,
    },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("trial iteration stalled after {iterations} steps (best residual {residual:e})")]
    TrialDivergence { iterations: usize, residual: f64 },

    #[error("bracket inversion: {0}")]
    BracketInversion(String),

    #[error("tau = {tau} is below the Bernoulli constant {lambda}")]
    InfeasibleTau { tau: f64, lambda: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name, used by the CLI error document and the C API.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::DegenerateBody(_) => "DegenerateBody",
            Error::GridMismatch { .. } => "GridMismatch",
            Error::OptimizationNonConvergence { .. } => "OptimizationNonConvergence",
            Error::NewtonDivergence { .. } => "NewtonDivergence",
            Error::ConvexityLoss { .. } => "ConvexityLoss",
            Error::GridTooCoarse(_) => "GridTooCoarse",
            Error::TrialDivergence { .. } => "TrialDivergence",
            Error::BracketInversion(_) => "BracketInversion",
            Error::InfeasibleTau { .. } => "InfeasibleTau",
            Error::LinearSolve(_) => "LinearSolve",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

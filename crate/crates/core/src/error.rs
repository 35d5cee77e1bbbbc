use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("initial point lies outside the feasible set")]
    InfeasibleStart,

    #[error("oracle returned a non-finite gradient at step {step}")]
    NonFiniteGradient { step: usize },

    #[error("step {step} is outside 1..={horizon}")]
    StepOutOfRange { step: usize, horizon: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point with norm {norm} lies outside the unit ball")]
    OutsideDomain { norm: f64 },

    #[error("active set at step {step} contains only the zero piece")]
    EmptyActiveSet { step: usize },

    #[error("trace has {got} iterates, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("strong convexity is only certified for the strongly convex family")]
    NotStronglyConvex,

    #[error("invalid walk profile: {0}")]
    InvalidProfile(String),

    #[error("closed form undefined: a[{index}] = 0 after a non-absorbing state")]
    ClosedFormUndefined { index: usize },

    #[error("linear system is singular at row {row}")]
    Singular { row: usize },

    #[error("power iteration stopped after {iterations} iterations with residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("insufficient trials: {0}")]
    InsufficientTrials(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

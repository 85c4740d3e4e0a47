use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("unknown model `{0}` (expected 1, 2, 3 or 4)")]
    UnknownModel(alloc::string::String),
    #[error("invalid Lévy measure: {0}")]
    InvalidLevy(&'static str),
    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(&'static str),
    #[error("state became non-finite at step {step} (t = {time})")]
    NonFiniteState { step: usize, time: f64 },
    #[error("degenerate interval [{lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },
    #[error("spline order {0} not supported (0..=4)")]
    UnsupportedOrder(u32),
    #[error("spline level {0} too large")]
    UnsupportedLevel(u32),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("path needs at least {needed} increments, got {got}")]
    PathTooShort { needed: usize, got: usize },
    #[error("degenerate path: all increments are zero")]
    DegeneratePath,
    #[error("bounds must be positive")]
    InvalidBounds,
    #[error("every fit on the selection grid is singular")]
    AllSingular,
    #[error("selection grid is empty")]
    EmptyGrid,
}

pub type Result<T> = core::result::Result<T, Error>;

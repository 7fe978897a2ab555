use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("relation is not self-adjoint within tolerance: {0}")]
    NotSelfAdjoint(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("eigenvalue too close to the real axis: {0}")]
    NoConvergence(String),
    #[error("root bracketing failed: {0}")]
    Bracket(String),
    #[error("refinement budget exhausted on the interval theta in [{lo}, {hi}]")]
    Refinement { lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

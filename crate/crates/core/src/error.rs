use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid sigma {0}: noise scale must be finite and positive")]
    InvalidSigma(f64),

    #[error("prior is not centered: mean = {mean:e}")]
    NonCenteredPrior { mean: f64 },

    #[error("negative input {0} where a nonnegative value is required")]
    NegativeInput(f64),

    #[error("tail supremum diverges for k = {k}: s^k * tail keeps growing at the end of the grid")]
    NonIntegrableTail { k: f64 },

    #[error("invalid tail condition: {0}")]
    InvalidTailCondition(String),

    #[error("degenerate prior: all atoms coincide")]
    DegeneratePrior,

    #[error("invalid quadrature spec: {0}")]
    InvalidQuadratureSpec(String),

    #[error("infeasible search config: {0}")]
    InfeasibleConfig(String),

    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

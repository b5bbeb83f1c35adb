use thiserror::Error;

use crate::solver::{PotentialPair, SolveReport};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("negative weight {weight} at atom {index}")]
    NegativeWeight { index: usize, weight: f64 },
    #[error("weights sum to {sum}, expected 1")]
    WeightSumMismatch { sum: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{points} points but {weights} weights")]
    LengthMismatch { points: usize, weights: usize },
    #[error("measure has no atoms")]
    EmptyMeasure,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("instance too large: {size} exceeds cap {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("epsilon must be positive, got {0}")]
    NonpositiveEpsilon(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    NotConverged {
        residual: f64,
        iterations: usize,
        best: Box<(PotentialPair, SolveReport)>,
    },
    #[error("no active set satisfies the sign conditions")]
    NoConsistentActiveSet,
    #[error("coupling marginals deviate by {defect:e}, allowed {allowed:e}")]
    InfeasibleCoupling { defect: f64, allowed: f64 },
    #[error("section of atom {index} is empty")]
    EmptySection { index: usize },
    #[error("operator is singular on the quotient space")]
    SingularOnQuotient,
    #[error("coupling support is empty")]
    EmptySupport,
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("covariance has eigenvalue {0:e} below the repair threshold")]
    FactorizationFailure(f64),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("rate fit needs positive errors and at least three points")]
    DegenerateInput,
    #[error("{failed} of {total} replications failed")]
    TooManyFailures { failed: usize, total: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

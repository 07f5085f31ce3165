use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode count mismatch: {0} vs {1}")]
    ModeMismatch(usize, usize),
    #[error("mode index {index} out of range for a {modes}-mode state")]
    InvalidMode { index: usize, modes: usize },
    #[error("beam splitter needs two distinct modes, got {0} twice")]
    SameMode(usize),
    #[error("state has zero norm (squared norm {0:e})")]
    ZeroNorm(f64),
    #[error("measurement branch has zero probability ({0:e})")]
    ZeroProbability(f64),
    #[error("state not supported by this operation: {0}")]
    Unsupported(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Bell measurement failed (no photons detected)")]
    BellFailure,
    #[error("cat-state projection missed the code space")]
    ProjectionFailure,
    #[error("repeat-until-success gave up after {0} attempts")]
    RetryLimit(usize),
    #[error("Fock cutoff too small: tail mass {0:e}")]
    Cutoff(f64),
    #[error("input set does not span the operator space (rank {rank} < {needed})")]
    NotSpanning { rank: usize, needed: usize },
    #[error("need at least two fringes to measure a spacing, found {0}")]
    TooFewFringes(usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

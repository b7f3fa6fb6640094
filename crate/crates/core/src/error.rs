use crate::series::YearMonth;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("series `{0}` is empty")]
    EmptySeries(String),

    #[error("{what}: need at least {needed} observations, got {got}")]
    TooShort {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("domain error at {month}: {reason}")]
    Domain { month: YearMonth, reason: String },

    #[error("series have no common months: {0}")]
    NoOverlap(String),

    #[error("misaligned inputs: {0}")]
    Misaligned(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("ill-conditioned weighting matrix: numerical rank {rank} of {dim}")]
    IllConditioned { rank: usize, dim: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("moment system: {0}")]
    MomentSystem(String),

    #[error("objective is not finite at the starting point")]
    NonFiniteObjective,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

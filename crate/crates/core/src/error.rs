use thiserror::Error;

/// Errors produced anywhere in the identification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: su(N) needs N >= 2")]
    InvalidDimension(usize),
    #[error("ill-conditioned basis: {0}")]
    IllConditionedBasis(String),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("inconsistent structure constants: {0}")]
    InconsistentStructure(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid power spectral density: {0}")]
    InvalidPsd(String),
    #[error("degenerate power spectral density: {0}")]
    DegeneratePsd(String),
    #[error("aliasing: {0}")]
    Aliasing(String),
    #[error("invalid segmentation: {0}")]
    InvalidSegmentation(String),
    #[error("trajectory too short: need at least {needed} samples, got {available} ({hint})")]
    Length {
        needed: usize,
        available: usize,
        hint: String,
    },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("requested order {order} exceeds numerical rank {rank}")]
    RankDeficiency { order: usize, rank: usize },
    #[error("matrix logarithm branch is ambiguous: eigenvalue {0} on the closed negative real axis")]
    BranchAmbiguity(String),
    #[error("aliasing suspected: {0}")]
    AliasingSuspected(String),
    #[error("no start converged (best weighted residual {best_residual:.3e})")]
    NoSolution { best_residual: f64, best_params: Vec<f64> },
    #[error("parameter spec error: {0}")]
    Spec(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line runner: 2 for configuration and
    /// input problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse(_) | Error::Spec(_) | Error::Io(_) | Error::Length { .. } => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

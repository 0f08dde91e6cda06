use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("{what} = {value} is outside its domain")]
    Domain { what: &'static str, value: f64 },

    #[error("singular input: {0}")]
    Singular(&'static str),

    #[error("cap of measure zero has no points to sample")]
    EmptyCap,

    #[error("resource guard: {needed} pair evaluations exceed the budget of {budget}")]
    ResourceBudget { needed: u128, budget: u128 },

    #[error("vertex {vertex} has zero degree; remove isolated vertices first")]
    DegenerateDegree { vertex: usize },

    #[error("eigensolver did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("operator is not a rank-1 PSD matrix: {0}")]
    NotRankOnePsd(String),

    #[error("vacuous input: {0}")]
    VacuousInput(String),

    #[error("step size dt = {dt} violates the stability condition dt*(d-1) <= {limit}")]
    Stability { dt: f64, limit: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("all total-variation estimates are at the noise floor {floor:e}")]
    InsufficientSignal { floor: f64 },

    #[error("step function is not nondecreasing at piece {index}")]
    NotMonotone { index: usize },

    #[error("invalid walk: {0}")]
    InvalidWalk(String),

    #[error("test embedding is degenerate (all points coincide)")]
    DegenerateEmbedding,

    #[error("eta = {0} is numerically 1; shell classification is degenerate")]
    DegenerateEta(f64),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config file is not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config { field: field.into(), reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("efficiency function has no positive root of f(x) = x f'(x) (packet size {packet_bits})")]
    DegenerateEfficiency { packet_bits: u32 },

    #[error("decorrelator needs K <= N, got K = {users}, N = {processing_gain}")]
    DecorrelatorInapplicable { users: usize, processing_gain: usize },

    #[error("spreading correlation matrix is singular or not positive definite")]
    SingularCorrelation,

    #[error("linear solve failed for {context} (condition estimate {condition:e})")]
    SolverFailure { context: String, condition: f64 },

    #[error("target SINR {sinr} is infeasible: {reason}")]
    Infeasible { sinr: f64, reason: String },

    #[error("target SINR {sinr} is not achievable (load term {load_term} >= 1)")]
    NotAchievable { sinr: f64, load_term: f64 },

    #[error("sharing probability needs at least two nodes")]
    TooFewNodes,

    #[error("no root found in [{lo}, {hi}] for {what}")]
    NoRoot { what: String, lo: f64, hi: f64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

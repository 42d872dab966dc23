use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;
use crate::planner::IllegalPlan;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid query sequence: {}", join_violations(.0))]
    InvalidSequence(Vec<Violation>),

    #[error("invalid device profile: {0}")]
    InvalidProfile(String),

    #[error("illegal plan: {0}")]
    IllegalPlan(IllegalPlan),

    #[error("strategy {0} requires sequence knowledge (no adjacent queries share an accelerator)")]
    RequiresSequenceKnowledge(crate::model::Strategy),

    #[error("scheduling error: {0}")]
    Scheduling(String),

    #[error("improvement baseline must be positive, got {0} ms")]
    ZeroBaseline(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("query log is not sorted by timestamp at line {line}")]
    UnsortedLog { line: usize },

    #[error("no catalog entry for template {0}")]
    MissingCatalogEntry(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("workload: {0}")]
    Workload(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("network has no follow records")]
    EmptyNetwork,

    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("id `{0}` is used both as a consumer and as an influencer")]
    OverlappingIds(String),

    #[error("partition is inconsistent with the graph: {0}")]
    InconsistentPartition(String),

    #[error("graph has zero total edge weight")]
    DegenerateGraph,

    #[error("invalid configuration: {0}")]
    ConfigError(String),

    #[error("consumer `{0}` is not covered by any hyperedge")]
    NotCovered(String),

    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    #[error("invalid community: {0}")]
    InvalidCommunity(String),

    #[error("unknown annotation dimension `{0}`")]
    UnknownDimension(String),

    #[error("contingency table has a zero margin")]
    DegenerateMargins,

    #[error("exact enumeration would visit more than {bound} tables; use Monte Carlo")]
    FallbackRequired { bound: u64 },

    #[error("schema error: {0}")]
    SchemaError(String),

    #[error("variable `{0}` is constant")]
    DegenerateVariable(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("value {value} is outside [0, 1]")]
    RangeError { value: f64 },

    #[error("invalid response: {0}")]
    InvalidResponse(String),

    #[error("design matrix is rank deficient (rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("optimizer did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NotConverged {
        iterations: usize,
        gradient_norm: f64,
        trace: Vec<f64>,
    },

    #[error("no candidate model could be fitted")]
    NoFeasibleModel,

    #[error("no rows left after outlier removal")]
    NoData,

    #[error("fewer than two retained scales; nothing to export")]
    NothingToExport,

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }
}

use thiserror::Error;

/// Errors produced anywhere in the attribution pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("empty partition: {0}")]
    EmptyPartition(String),

    #[error("type error: {0}")]
    Type(String),

    #[error("dimension mismatch: expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A split node is reached by no rows under one of the distributions, so
    /// its conditional probability cannot be estimated.
    #[error("undefined conditional at split node {node_id}: reached by 0 rows under {distribution}")]
    UndefinedConditional {
        node_id: usize,
        distribution: &'static str,
    },

    #[error("too many factors for exact enumeration: {factors} > limit {limit}; use kernel SHAP or prune-and-regrow")]
    TooManyFactors { factors: usize, limit: usize },

    #[error("singular regression system: {0}; try a larger sample budget")]
    SingularSystem(String),

    #[error("renormalisation singularity: {0}")]
    Renormalisation(String),

    #[error("degenerate reweighting for conditional `{0}`: source probability is 0 or 1")]
    DegenerateReweight(String),

    #[error("missing leaf-means attribution; explanation was computed without the LeafMeans factor")]
    MissingLeafMeans,

    #[error("every tree in the ensemble failed: {0}")]
    AllTreesFailed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

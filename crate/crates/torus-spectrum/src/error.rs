use thiserror::Error;

/// Errors produced by the library. The CLI maps these onto exit codes:
/// validation failures → 2, search exhaustion → 3, invariant breaches → 70.
#[derive(Debug, Error)]
pub enum Error {
    #[error("exponent p must satisfy p > 1 (got {0})")]
    InvalidExponent(f64),

    #[error("epsilon must lie in (0, 1/2) (got {0})")]
    EpsilonOutOfRange(f64),

    #[error("ambient dimension mismatch: {0} vs {1}")]
    DimensionMismatch(u32, u32),

    #[error("invalid subtorus spec: {0}")]
    InvalidSubtorus(String),

    #[error("grid would hold {requested} points, limit is {limit}")]
    GridTooLarge { requested: u128, limit: u128 },

    #[error("block {block} has {size} indices, beyond the practical index range")]
    BlockTooLarge { block: u32, size: String },

    #[error("subtorus search exhausted {attempts} attempts at stage {stage}")]
    SearchExhausted { attempts: u64, stage: usize },

    #[error("function is not 1-Lipschitz: constant {0} exceeds 1")]
    NotUnitLipschitz(f64),

    #[error("function spec: {0}")]
    FunctionSpec(String),

    #[error("{bad} of {total} evaluations were non-finite, above the abort fraction")]
    NonFiniteEvaluations { bad: u64, total: u64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

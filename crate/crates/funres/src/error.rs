//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("invalid term: {0}")]
    InvalidTerm(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),

    #[error("quantile argument {0} is outside (0, 1)")]
    QuantileDomain(f64),

    #[error("design matrix is rank deficient (column {0})")]
    RankDeficient(usize),

    #[error("apparent complete separation: coefficient norm exceeded {0}")]
    CompleteSeparation(f64),

    #[error("outcome {y} is numerically impossible under the model (interval width {width:e})")]
    DegenerateInterval { y: i64, width: f64 },

    #[error("outcome {y} is outside the model support (max {max})")]
    OutcomeOutOfRange { y: i64, max: i64 },

    #[error("{0} is only defined for {1} families")]
    UnsupportedFamily(&'static str, &'static str),

    #[error("subgroup filter selected no rows")]
    EmptySubgroup,

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("csv parse error at row {row}: {message}")]
    CsvParse { row: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Pipeline(String),
}

//! Crate-wide error type with pipeline stage attribution.

use thiserror::Error;

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data (e.g. a ragged CSV row).
    #[error("ingest error at data row {row}: {message}")]
    Ingest { row: usize, message: String },

    /// Structural problem with the input schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// A column cannot be imputed.
    #[error("imputation error: column '{0}' has no observed values")]
    Imputation(String),

    /// An argument violated a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Operation called on data in the wrong state (e.g. missing cells present).
    #[error("invalid state: {0}")]
    State(String),

    /// Clustering initialization cannot proceed.
    #[error("initialization error: {0}")]
    Init(String),

    /// Model fitting failed.
    #[error("fit error: {0}")]
    Fit(String),

    /// Post-pruning failed.
    #[error("prune error: {0}")]
    Prune(String),

    /// A selection matched nothing.
    #[error("selection error: {0}")]
    Selection(String),

    /// Serialized model/artifact is malformed or has an unsupported version.
    #[error("format error: {0}")]
    Format(String),

    /// Experiment configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// Error wrapped with the pipeline stage it occurred in.
    #[error("stage '{stage}': {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps an error with the pipeline stage that produced it.
    pub fn at_stage(stage: &'static str, source: Error) -> Error {
        Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}

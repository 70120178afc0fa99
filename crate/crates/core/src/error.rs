use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A required column is absent from the input header.
    #[error("schema error: missing required column {0}")]
    MissingColumn(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    /// Too many rows failed cleansing; usually a schema or date-format mismatch.
    #[error("cleansing dropped {dropped} of {total} rows (limit is 10%); check the schema and datetime format")]
    ExcessiveDrops { dropped: usize, total: usize },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite objective at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("solver did not converge within {iterations} iterations (violation {violation:.3e})")]
    NoConvergence { iterations: usize, violation: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input or configuration rather than a
    /// failure while computing.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::MissingColumn(_)
                | Error::Parse { .. }
                | Error::ExcessiveDrops { .. }
                | Error::Validation(_)
                | Error::DimensionMismatch { .. }
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}

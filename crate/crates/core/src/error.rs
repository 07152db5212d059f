use thiserror::Error;

/// Errors raised by the shared domain types and fisheries math.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("invalid age range: {0}")]
    InvalidAgeRange(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("year {year} missing from {source_name}")]
    MissingYear { year: i32, source_name: String },

    #[error("age {age} outside range {min}..={max}")]
    AgeOutOfRange { age: u32, min: u32, max: u32 },

    #[error("feature schema error: {0}")]
    Schema(String),
}

use thiserror::Error;

/// Errors from boosting and prediction.
#[derive(Debug, Clone, Error)]
pub enum GbtError {
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperParams(String),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("feature/target length mismatch: {features} features vs {targets} targets")]
    LengthMismatch { features: usize, targets: usize },

    #[error("feature schema mismatch: expected {expected}, got {got}")]
    SchemaMismatch { expected: String, got: String },

    #[error("training target must be finite, got {0}")]
    InvalidTarget(f64),

    #[error("ensemble serialization failed: {0}")]
    Serialization(String),
}

//! Hybrid correction pipeline: assessment estimates and forecasts are
//! post-hoc corrected by a gradient-boosted-trees model, evaluated under
//! a strict past-only expanding-window protocol.
//!
//! For every evaluation year the corrector trains exclusively on tuples
//! whose features come from models fitted on data available at the time,
//! then predicts the held-out year. Reports carry both the corrected and
//! the uncorrected (baseline) prediction so the comparison stays honest.

mod backtest;
mod cache;
mod dataset;
mod labels;
mod metrics;
mod task;

pub use backtest::{
    backtest, hybrid_prediction, run_task, Aggregates, BacktestReport, ReportRow, StepArtifacts,
};
pub use cache::ModelCache;
pub use dataset::{audit_provenance, build_dataset, Dataset, Provenance, TrainingTuple};
pub use labels::make_labels;
pub use metrics::{r_squared, rmse};
pub use task::{FeatureVariant, LabelPolicy, Task, TaskSpec};

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum HybridError {
    #[error("invalid task: {0}")]
    InvalidTask(String),

    #[error("insufficient training data: {got} usable tuples, need at least {need}")]
    InsufficientData { got: usize, need: usize },

    #[error("model for year {0} is missing or did not converge")]
    ModelUnavailable(i32),

    #[error("label for year {0} is unavailable")]
    LabelUnavailable(i32),

    #[error("metric input error: {0}")]
    Metric(String),

    #[error("every evaluation year was skipped: {0}")]
    EmptyReport(String),

    #[error(transparent)]
    Assess(#[from] stockcast_assess::AssessError),

    #[error(transparent)]
    Gbt(#[from] stockcast_gbt::GbtError),

    #[error(transparent)]
    Core(#[from] stockcast_core::CoreError),
}

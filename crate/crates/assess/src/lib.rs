//! Age-structured state-space stock assessment fitted by maximum
//! likelihood.
//!
//! The latent state per year is `(log n_{a} for every age, log f)` with
//! separable fishing mortality `F_{a,t} = S_a * f_t`. An extended Kalman
//! filter evaluates the prediction-error likelihood over log-scale catch
//! and survey observations; a derivative-free simplex search estimates
//! the noise, catchability, selectivity and recruitment parameters; an
//! RTS pass produces smoothed historical states. Current-year estimates
//! come from the filtered terminal state, historical estimates from the
//! smoothed states, so only series ends get revised as data accrue.

mod config;
mod filter;
mod model;
mod optim;
mod params;
mod retro;

mod fit;

pub use config::{
    AssessorConfig, ForecastPolicy, OptimizerSettings, RecruitmentModel, SelectivityStart,
};
pub use fit::{
    derive_parameter, evaluate_at, fit, fit_warm, nll, FittedAssessment, StateEstimate, StateFlag,
};
pub use optim::{minimize, NmResult, NmSettings};
pub use params::{ParamLayout, Params, QBlocks, RecruitmentParams};
pub use retro::{derived_series, mohns_rho, retrospective_matrix, MohnsRho, RetroMatrix};

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum AssessError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model did not converge")]
    NotConverged,

    #[error("year {year} outside fitted range {first}..={last}")]
    YearOutOfRange { year: i32, first: i32, last: i32 },

    #[error("unsupported forecast horizon {0} (only 1..=3)")]
    UnsupportedHorizon(u32),

    #[error("numerical collapse in the filter")]
    NumericalCollapse,

    #[error("model serialization failed: {0}")]
    Serialization(String),

    #[error(transparent)]
    Core(#[from] stockcast_core::CoreError),
}

//! Synthetic age-structured stock generator.
//!
//! Produces trajectories with known ground truth: log-space survival and
//! Beverton-Holt recruitment drive the process, log-normal noise drives
//! the observations. An optional AR(1) environment signal can load onto
//! recruitment and onto one survey's catchability, giving the assessment
//! model a misspecification that a downstream corrector can learn.

mod config;
mod simulate;
mod streams;

pub use config::{Environment, FishingPath, FleetSimConfig, SimConfig, SurveyCatchability};
pub use simulate::{
    beverton_holt, biology_of, equilibrium_abundance, generate_observations, simulate,
    step_population, TrueTrajectory,
};

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("equilibrium warm-up did not converge within {0} years")]
    NonConvergentEquilibrium(usize),

    #[error(transparent)]
    Core(#[from] stockcast_core::CoreError),
}

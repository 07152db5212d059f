use serde::{Deserialize, Serialize};
use stockcast_core::AgeRange;

/// How fishing selectivity is parameterized: logistic in age with an
/// inflection `a50` and a log-estimated slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectivityStart {
    pub a50: f64,
    pub slope: f64,
}

/// Recruitment transition inside the state-space model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum RecruitmentModel {
    /// Beverton-Holt with estimated (alpha, beta); starts at the given values.
    BevertonHolt { alpha_start: f64, beta_start: f64 },
    /// Log-scale random walk on recruitment.
    RandomWalk,
}

/// Fishing intensity assumption for forecasts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastPolicy {
    /// Hold the terminal fishing intensity.
    StatusQuo,
    /// Use the mean smoothed log-intensity of the last three years.
    MeanLast3,
}

/// Derivative-free optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    /// Number of Nelder-Mead runs: the plain defaults plus jittered starts.
    pub restarts: usize,
    pub max_evals: usize,
    pub tol: f64,
    /// Log-space standard deviation of the start jitter.
    pub jitter: f64,
    pub jitter_seed: u64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            restarts: 3,
            max_evals: 10_000,
            tol: 1e-6,
            jitter: 0.3,
            jitter_seed: 0x0a55_e55e,
        }
    }
}

/// Configuration of the assessment model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessorConfig {
    pub ages: AgeRange,
    /// Starting point for the estimated logistic selectivity.
    pub selectivity_start: SelectivityStart,
    pub recruitment: RecruitmentModel,
    pub optimizer: OptimizerSettings,
    pub forecast_policy: ForecastPolicy,
    /// Fishing intensity anchoring the equilibrium prior for the initial
    /// state (and the starting value of the latent intensity walk).
    pub initial_f: f64,
    /// Recruitment anchor for the equilibrium prior when the recruitment
    /// model is a random walk (thousands).
    pub prior_recruitment: f64,
    /// Starting values for the noise and catchability parameters.
    pub sigma_proc_start: f64,
    pub sigma_f_start: f64,
    pub sigma_obs_start: f64,
    pub catchability_start: f64,
}

impl AssessorConfig {
    pub fn new(ages: AgeRange) -> Self {
        Self {
            ages,
            selectivity_start: SelectivityStart {
                a50: ages.min_age() as f64 + 1.0,
                slope: 1.5,
            },
            recruitment: RecruitmentModel::BevertonHolt {
                alpha_start: 2.0,
                beta_start: 0.001,
            },
            optimizer: OptimizerSettings::default(),
            forecast_policy: ForecastPolicy::StatusQuo,
            initial_f: 0.25,
            prior_recruitment: 1000.0,
            sigma_proc_start: 0.15,
            sigma_f_start: 0.15,
            sigma_obs_start: 0.25,
            catchability_start: 0.3,
        }
    }
}

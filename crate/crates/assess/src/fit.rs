//! Maximum-likelihood fitting and the fitted-model API: current-year
//! estimates, historical (smoothed) estimates, forecasts and derived
//! stock parameters.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use stockcast_core::{
    recruitment_of, ssb, AbundanceVector, BiologySeries, ObservationSeries, ParameterKind,
};

use crate::config::{AssessorConfig, ForecastPolicy};
use crate::filter::{run_filter, smooth};
use crate::model::Model;
use crate::optim::{minimize, NmSettings};
use crate::params::{ParamLayout, Params};
use crate::AssessError;

/// Which pass produced a state estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateFlag {
    Filtered,
    Smoothed,
    Forecast,
}

/// Per-year latent state summary: mean and covariance of
/// `(log n_min..log n_max, log f)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEstimate {
    pub year: i32,
    pub mean: Vec<f64>,
    /// Row-major covariance.
    pub cov: Vec<f64>,
    pub flag: StateFlag,
}

impl StateEstimate {
    fn from_moments(
        year: i32,
        mean: &DVector<f64>,
        cov: &nalgebra::DMatrix<f64>,
        flag: StateFlag,
    ) -> Self {
        Self {
            year,
            mean: mean.iter().copied().collect(),
            cov: cov.iter().copied().collect(),
            flag,
        }
    }
}

/// A fitted assessment model: parameters at the likelihood optimum plus
/// filtered and smoothed states for every data year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedAssessment {
    pub config: AssessorConfig,
    pub params: Params,
    pub nll: f64,
    pub converged: bool,
    pub filtered: Vec<StateEstimate>,
    pub smoothed: Vec<StateEstimate>,
    pub first_year: i32,
    pub last_data_year: i32,
}

/// Fleets sorted by name: the internal canonical order. Parameter packing
/// and optimizer trajectories then do not depend on how the caller
/// happened to order the fleets.
fn canonical(obs: &ObservationSeries) -> Result<ObservationSeries, AssessError> {
    let mut fleets = obs.fleets().to_vec();
    fleets.sort_by(|a, b| a.name().cmp(b.name()));
    ObservationSeries::new(fleets).map_err(Into::into)
}

fn validate_inputs(obs: &ObservationSeries, bio: &BiologySeries) -> Result<(), AssessError> {
    if obs.n_years() < 10 {
        return Err(AssessError::InvalidInput(format!(
            "need at least 10 years of observations, got {}",
            obs.n_years()
        )));
    }
    if bio.first_year() > obs.first_year() || bio.last_year() < obs.last_year() {
        return Err(AssessError::InvalidInput(format!(
            "biology covers {}..={} but observations span {}..={}",
            bio.first_year(),
            bio.last_year(),
            obs.first_year(),
            obs.last_year()
        )));
    }
    Ok(())
}

/// Prediction-error negative log-likelihood at `params`, with
/// `f64::INFINITY` as the optimizer-safe sentinel for numerical collapse.
pub fn nll(
    params: &Params,
    obs: &ObservationSeries,
    bio: &BiologySeries,
    cfg: &AssessorConfig,
) -> f64 {
    let Ok(obs) = canonical(obs) else {
        return f64::INFINITY;
    };
    let Ok(layout) = ParamLayout::new(&obs, cfg) else {
        return f64::INFINITY;
    };
    nll_with_layout(params, &obs, bio, cfg, &layout)
}

fn nll_with_layout(
    params: &Params,
    obs: &ObservationSeries,
    bio: &BiologySeries,
    cfg: &AssessorConfig,
    layout: &ParamLayout,
) -> f64 {
    let model = Model::new(params, cfg, bio, &layout.q_blocks);
    match run_filter(&model, obs) {
        Some(out) if out.nll.is_finite() => out.nll,
        _ => f64::INFINITY,
    }
}

/// Run the filter and smoother at fixed parameters (no optimization).
pub fn evaluate_at(
    params: Params,
    obs: &ObservationSeries,
    bio: &BiologySeries,
    cfg: &AssessorConfig,
) -> Result<FittedAssessment, AssessError> {
    let obs = canonical(obs)?;
    validate_inputs(&obs, bio)?;
    let layout = ParamLayout::new(&obs, cfg)?;
    build_fitted(params, &obs, bio, cfg, &layout, true)
}

fn build_fitted(
    params: Params,
    obs: &ObservationSeries,
    bio: &BiologySeries,
    cfg: &AssessorConfig,
    layout: &ParamLayout,
    optimizer_converged: bool,
) -> Result<FittedAssessment, AssessError> {
    let model = Model::new(&params, cfg, bio, &layout.q_blocks);
    let out = run_filter(&model, obs).ok_or(AssessError::NumericalCollapse)?;
    let smoothed_moments = smooth(&out).ok_or(AssessError::NumericalCollapse)?;
    let first_year = obs.first_year();
    let filtered: Vec<StateEstimate> = out
        .filtered
        .iter()
        .enumerate()
        .map(|(i, (m, p))| {
            StateEstimate::from_moments(first_year + i as i32, m, p, StateFlag::Filtered)
        })
        .collect();
    let converged = optimizer_converged && out.nll.is_finite();
    let smoothed: Vec<StateEstimate> = if converged {
        smoothed_moments
            .iter()
            .enumerate()
            .map(|(i, (m, p))| {
                StateEstimate::from_moments(first_year + i as i32, m, p, StateFlag::Smoothed)
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(FittedAssessment {
        config: cfg.clone(),
        params,
        nll: out.nll,
        converged,
        filtered,
        smoothed,
        first_year,
        last_data_year: obs.last_year(),
    })
}

/// Fit by derivative-free simplex minimization from the configured
/// defaults plus jittered restarts. Deterministic given inputs.
pub fn fit(
    obs: &ObservationSeries,
    bio: &BiologySeries,
    cfg: &AssessorConfig,
) -> Result<FittedAssessment, AssessError> {
    fit_impl(obs, bio, cfg, None)
}

/// Fit with a warm start (typically the previous year's optimum in
/// expanding-window loops); the configured defaults still join the start
/// list as a safeguard against a poor initial guess.
pub fn fit_warm(
    obs: &ObservationSeries,
    bio: &BiologySeries,
    cfg: &AssessorConfig,
    init: &Params,
) -> Result<FittedAssessment, AssessError> {
    fit_impl(obs, bio, cfg, Some(init))
}

fn fit_impl(
    obs: &ObservationSeries,
    bio: &BiologySeries,
    cfg: &AssessorConfig,
    init: Option<&Params>,
) -> Result<FittedAssessment, AssessError> {
    let obs = &canonical(obs)?;
    validate_inputs(obs, bio)?;
    let layout = ParamLayout::new(obs, cfg)?;
    let defaults = layout.pack(&layout.start_params(cfg));

    let settings = NmSettings {
        max_evals: cfg.optimizer.max_evals,
        tol: cfg.optimizer.tol,
        ..Default::default()
    };
    let objective = |v: &[f64]| nll_with_layout(&layout.unpack(v), obs, bio, cfg, &layout);

    // A converged warm start short-circuits the restart schedule: the
    // previous year's optimum sits in the right basin for the next year.
    if let Some(p) = init {
        let warm = minimize(
            objective,
            &layout.pack(p),
            &layout.lower,
            &layout.upper,
            &settings,
        );
        if warm.converged && warm.fx.is_finite() {
            let params = layout.unpack(&warm.x);
            return build_fitted(params, obs, bio, cfg, &layout, true);
        }
    }

    let mut starts: Vec<Vec<f64>> = vec![defaults.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.optimizer.jitter_seed);
    while starts.len() < cfg.optimizer.restarts.max(1) {
        let jittered: Vec<f64> = defaults
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (v + cfg.optimizer.jitter * z).clamp(layout.lower[i], layout.upper[i])
            })
            .collect();
        starts.push(jittered);
    }

    let mut best: Option<crate::optim::NmResult> = None;
    for start in &starts {
        let result = minimize(objective, start, &layout.lower, &layout.upper, &settings);
        if best.as_ref().is_none_or(|b| result.fx < b.fx) {
            best = Some(result);
        }
    }
    let best = best.expect("at least one start");
    let params = layout.unpack(&best.x);
    let optimizer_converged = best.converged && best.fx.is_finite();
    build_fitted(params, obs, bio, cfg, &layout, optimizer_converged)
}

impl FittedAssessment {
    fn n_ages(&self) -> usize {
        self.config.ages.len()
    }

    fn state_to_abundance(&self, state: &StateEstimate) -> Result<AbundanceVector, AssessError> {
        let values: Vec<f64> = self.state_fields(state).iter().map(|v| v.exp()).collect();
        AbundanceVector::new(state.year, self.config.ages, values).map_err(Into::into)
    }

    fn state_fields<'a>(&self, state: &'a StateEstimate) -> &'a [f64] {
        &state.mean[..self.n_ages()]
    }

    /// Abundance estimate for a fitted year: the filtered state for the
    /// terminal data year (the current-year estimate), the smoothed state
    /// for earlier years. Median-unbiased back-transform (plain exp).
    pub fn estimate(&self, year: i32) -> Result<AbundanceVector, AssessError> {
        if !self.converged {
            return Err(AssessError::NotConverged);
        }
        if year < self.first_year || year > self.last_data_year {
            return Err(AssessError::YearOutOfRange {
                year,
                first: self.first_year,
                last: self.last_data_year,
            });
        }
        let offset = (year - self.first_year) as usize;
        let state = if year == self.last_data_year {
            &self.filtered[offset]
        } else {
            &self.smoothed[offset]
        };
        self.state_to_abundance(state)
    }

    /// Smoothed log fishing intensity per year.
    pub fn fishing_intensity(&self) -> Vec<(i32, f64)> {
        let n = self.n_ages();
        self.smoothed
            .iter()
            .map(|s| (s.year, s.mean[n].exp()))
            .collect()
    }

    /// Deterministic mean projection `horizon` years past the terminal
    /// data year, with fishing intensity per the forecast policy and
    /// recruitment through the fitted recruitment model. Only short
    /// horizons are supported.
    pub fn forecast(
        &self,
        bio: &BiologySeries,
        horizon: u32,
    ) -> Result<AbundanceVector, AssessError> {
        if !self.converged {
            return Err(AssessError::NotConverged);
        }
        if horizon == 0 || horizon > 3 {
            return Err(AssessError::UnsupportedHorizon(horizon));
        }
        let n = self.n_ages();
        let terminal = self.filtered.last().ok_or(AssessError::NumericalCollapse)?;
        let mut x = DVector::from_vec(terminal.mean.clone());
        if self.config.forecast_policy == ForecastPolicy::MeanLast3 {
            let tail: Vec<f64> = self
                .smoothed
                .iter()
                .rev()
                .take(3)
                .map(|s| s.mean[n])
                .collect();
            if !tail.is_empty() {
                x[n] = tail.iter().sum::<f64>() / tail.len() as f64;
            }
        }
        // Observation maps are not needed for projection, so the model is
        // built without catchability blocks.
        let q_blocks = crate::params::QBlocks {
            block_of_age: Vec::new(),
            n_blocks: Vec::new(),
            survey_of_fleet: Vec::new(),
        };
        let model = Model::new(&self.params, &self.config, bio, &q_blocks);
        let mut year = self.last_data_year;
        for _ in 0..horizon {
            let (g, _) = model.process(&x, year);
            x = g;
            year += 1;
        }
        let values: Vec<f64> = (0..n).map(|i| x[i].exp()).collect();
        AbundanceVector::new(year, self.config.ages, values).map_err(Into::into)
    }

    /// JSON text form of the fitted model.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fitted model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, AssessError> {
        serde_json::from_str(text).map_err(|e| AssessError::Serialization(e.to_string()))
    }
}

/// Derived stock parameter from an abundance estimate.
pub fn derive_parameter(
    n: &AbundanceVector,
    bio: &BiologySeries,
    kind: ParameterKind,
) -> Result<f64, AssessError> {
    match kind {
        ParameterKind::Recruitment => Ok(recruitment_of(n)),
        ParameterKind::Ssb => ssb(n, bio).map_err(Into::into),
    }
}

//! Training/test tuple construction for the correction tasks.
//!
//! Estimation tuples pair the current-year estimate of model `M_i` and
//! the observations of year `i` with the label for year `i`. Forecast
//! tuples pair the one-year forecast of `M_i` and the observations of
//! year `i` with the label for year `i + 1`. Either way no feature looks
//! past its model's last data year, and every tuple records where its
//! features came from so the leakage audit is mechanical.

use std::collections::BTreeMap;
use std::sync::Arc;

use stockcast_assess::{derive_parameter, FittedAssessment};
use stockcast_core::{
    flatten_features, BiologySeries, FeatureParts, FeatureVector, FleetCells, ObservationSeries,
    ParameterKind, StockParameterSeries,
};

use crate::task::{FeatureVariant, LabelPolicy, Task, TaskSpec};
use crate::HybridError;

/// Minimum usable training tuples per task.
pub const MIN_TRAINING_TUPLES: usize = 5;

/// Where a tuple's features came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    /// Last data year of the model that produced the estimate features.
    pub model_year: i32,
    /// Year of the observation features (equals `model_year` for both
    /// tasks; forecasts use `c_t` for target `t + 1`).
    pub obs_year: i32,
    /// Upper bound both years must respect.
    pub bound: i32,
}

impl Provenance {
    pub fn is_clean(&self) -> bool {
        self.model_year <= self.bound && self.obs_year <= self.bound
    }
}

/// One supervised example.
#[derive(Debug, Clone)]
pub struct TrainingTuple {
    /// Year of the features (the model year `i`).
    pub year: i32,
    /// Year the label refers to (`i` for estimation, `i + 1` for forecast).
    pub target_year: i32,
    pub features: FeatureVector,
    pub label: f64,
    pub provenance: Provenance,
}

/// A complete dataset for one evaluation year.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<TrainingTuple>,
    pub test: TrainingTuple,
}

impl Dataset {
    /// The uncorrected assessor prediction inside the test features.
    pub fn baseline(&self, spec: &TaskSpec) -> f64 {
        baseline_feature(&self.test.features, spec)
    }
}

/// The `r_hat` feature of a tuple: `SSB_hat` for SSB targets, the
/// minimum-age abundance estimate for recruitment targets.
pub fn baseline_feature(features: &FeatureVector, spec: &TaskSpec) -> f64 {
    let name = match spec.target {
        ParameterKind::Ssb => "SSB_hat".to_string(),
        ParameterKind::Recruitment => {
            // The abundance block starts at the minimum age; its name is
            // the first N_ feature.
            features
                .names()
                .find(|n| n.starts_with("N_a"))
                .expect("recruitment features include abundance")
                .to_string()
        }
    };
    features
        .get(&name)
        .expect("baseline feature present")
        .expect("baseline feature never missing")
}

fn observation_cells(obs: &ObservationSeries, year: i32) -> Vec<FleetCells> {
    obs.fleets()
        .iter()
        .map(|fleet| FleetCells {
            fleet: fleet.name().to_string(),
            cells: fleet
                .coverage()
                .into_iter()
                .map(|age| (age, fleet.value(year, age)))
                .collect(),
        })
        .collect()
}

/// Features for one tuple: the estimate/forecast of `model` for
/// `feature_year + (0|1)` plus the observations of `feature_year`.
fn tuple_features(
    spec: &TaskSpec,
    model: &FittedAssessment,
    obs: &ObservationSeries,
    bio: &BiologySeries,
    feature_year: i32,
) -> Result<(FeatureVector, f64), HybridError> {
    debug_assert_eq!(model.last_data_year, feature_year);
    let estimate = match spec.task {
        Task::Estimation => model.estimate(feature_year)?,
        Task::Forecast => model.forecast(bio, 1)?,
    };
    let derived = derive_parameter(&estimate, bio, spec.target)?;
    let parts = match spec.feature_variant {
        FeatureVariant::AbundancePlusObs => FeatureParts {
            parameters: vec![],
            abundance: Some(&estimate),
            observations: observation_cells(obs, feature_year),
        },
        FeatureVariant::SsbPlusObs => FeatureParts {
            parameters: vec![(ParameterKind::Ssb, derived)],
            abundance: None,
            observations: observation_cells(obs, feature_year),
        },
        FeatureVariant::SsbOnly => FeatureParts {
            parameters: vec![(ParameterKind::Ssb, derived)],
            abundance: None,
            observations: vec![],
        },
    };
    Ok((flatten_features(&parts)?, derived))
}

fn label_for(
    spec: &TaskSpec,
    labels: &StockParameterSeries,
    step_model: &FittedAssessment,
    bio: &BiologySeries,
    target_year: i32,
    is_test: bool,
) -> Result<f64, HybridError> {
    match (spec.label_policy, is_test) {
        // Scoring labels always come from the reference (final) series.
        (LabelPolicy::FinalModel, _) | (LabelPolicy::StrictPast, true) => labels
            .get(target_year)
            .ok_or(HybridError::LabelUnavailable(target_year)),
        (LabelPolicy::StrictPast, false) => {
            let n = step_model.estimate(target_year)?;
            Ok(derive_parameter(&n, bio, spec.target)?)
        }
    }
}

/// Build the training tuples and the held-out test tuple for evaluation
/// year `upto`.
///
/// For estimation the test model is `M_upto`; for forecasting the test
/// model is `M_{upto-1}` projecting one year ahead. Training tuples use
/// every converged model strictly before the test model; tuples whose
/// model is absent or non-converged are dropped.
pub fn build_dataset(
    spec: &TaskSpec,
    models: &BTreeMap<i32, Arc<FittedAssessment>>,
    obs: &ObservationSeries,
    bio: &BiologySeries,
    labels: &StockParameterSeries,
    upto: i32,
) -> Result<Dataset, HybridError> {
    spec.validate()?;
    let test_model_year = match spec.task {
        Task::Estimation => upto,
        Task::Forecast => upto - 1,
    };
    let test_model = models
        .get(&test_model_year)
        .filter(|m| m.converged)
        .ok_or(HybridError::ModelUnavailable(test_model_year))?;

    let mut train = Vec::new();
    for (&model_year, model) in models.range(..test_model_year) {
        if !model.converged {
            continue;
        }
        let target_year = match spec.task {
            Task::Estimation => model_year,
            Task::Forecast => model_year + 1,
        };
        // Forecast training labels must stay within the data the test
        // model has seen.
        if target_year > test_model_year {
            continue;
        }
        let (features, _) = tuple_features(spec, model, obs, bio, model_year)?;
        let label = label_for(spec, labels, test_model, bio, target_year, false)?;
        train.push(TrainingTuple {
            year: model_year,
            target_year,
            features,
            label,
            provenance: Provenance {
                model_year,
                obs_year: model_year,
                bound: model_year,
            },
        });
    }
    if train.len() < MIN_TRAINING_TUPLES {
        return Err(HybridError::InsufficientData {
            got: train.len(),
            need: MIN_TRAINING_TUPLES,
        });
    }

    let (features, _) = tuple_features(spec, test_model, obs, bio, test_model_year)?;
    let label = label_for(spec, labels, test_model, bio, upto, true)?;
    let test = TrainingTuple {
        year: test_model_year,
        target_year: upto,
        features,
        label,
        provenance: Provenance {
            model_year: test_model_year,
            obs_year: test_model_year,
            bound: test_model_year,
        },
    };
    Ok(Dataset { train, test })
}

/// Mechanical leakage audit: the number of tuples whose features draw on
/// information past their allowed bound. A sound pipeline reports zero.
pub fn audit_provenance<'a>(tuples: impl IntoIterator<Item = &'a TrainingTuple>) -> usize {
    tuples
        .into_iter()
        .filter(|t| !t.provenance.is_clean())
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_audit_flags_violations() {
        let clean = Provenance {
            model_year: 5,
            obs_year: 5,
            bound: 5,
        };
        let model_leak = Provenance {
            model_year: 6,
            obs_year: 5,
            bound: 5,
        };
        let obs_leak = Provenance {
            model_year: 5,
            obs_year: 7,
            bound: 5,
        };
        assert!(clean.is_clean());
        assert!(!model_leak.is_clean());
        assert!(!obs_leak.is_clean());

        let fv = FeatureVector::new(vec![("x".into(), Some(1.0))]).unwrap();
        let mk = |p: Provenance| TrainingTuple {
            year: 5,
            target_year: 5,
            features: fv.clone(),
            label: 0.0,
            provenance: p,
        };
        let tuples = vec![mk(clean), mk(model_leak), mk(obs_leak)];
        assert_eq!(audit_provenance(&tuples), 2);
    }
}

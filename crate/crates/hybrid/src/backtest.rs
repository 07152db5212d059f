//! The expanding-window backtest: per evaluation year, train the
//! corrector on strictly-past tuples, predict the held-out year, and
//! score corrected vs. uncorrected predictions.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use stockcast_assess::{AssessorConfig, FittedAssessment};
use stockcast_core::{BiologySeries, FeatureVector, ObservationSeries, StockParameterSeries};
use stockcast_gbt::{GbtHyperParams, TreeEnsemble};

use crate::cache::ModelCache;
use crate::dataset::{audit_provenance, build_dataset, Dataset, TrainingTuple};
use crate::labels::make_labels;
use crate::metrics::{r_squared, rmse};
use crate::task::{FeatureVariant, Task, TaskSpec};
use crate::HybridError;

/// One evaluation year of a backtest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    /// The year being predicted.
    pub year: i32,
    pub label: f64,
    /// Uncorrected assessor prediction (the r_hat feature of the test tuple).
    pub baseline: f64,
    /// Corrected prediction under the primary feature variant.
    pub hybrid: f64,
    /// Corrected prediction under the alternate SSB feature subset.
    pub hybrid_alt: Option<f64>,
}

/// Aggregated backtest results for one task specification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub stock: String,
    pub task: Task,
    pub target: stockcast_core::ParameterKind,
    pub feature_variant: FeatureVariant,
    pub alt_variant: Option<FeatureVariant>,
    pub label_policy: crate::task::LabelPolicy,
    pub k: usize,
    pub rows: Vec<ReportRow>,
    /// Years that produced no row, with the reason.
    pub skipped: Vec<(i32, String)>,
    pub ml_rmse: f64,
    pub ml_r2: Option<f64>,
    pub baseline_rmse: f64,
    pub baseline_r2: Option<f64>,
    pub alt_rmse: Option<f64>,
    pub alt_r2: Option<f64>,
    /// Tuples whose features drew on data past their bound; zero in a
    /// sound pipeline.
    pub provenance_violations: usize,
}

/// RMSE / R-squared aggregates of a report's rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregates {
    pub ml_rmse: f64,
    pub ml_r2: Option<f64>,
    pub baseline_rmse: f64,
    pub baseline_r2: Option<f64>,
    pub alt_rmse: Option<f64>,
    pub alt_r2: Option<f64>,
}

impl BacktestReport {
    /// Recompute every aggregate from the rows (the stored values must
    /// always match this).
    pub fn aggregates_from_rows(rows: &[ReportRow]) -> Result<Aggregates, HybridError> {
        let labels: Vec<f64> = rows.iter().map(|r| r.label).collect();
        let hybrid: Vec<f64> = rows.iter().map(|r| r.hybrid).collect();
        let baseline: Vec<f64> = rows.iter().map(|r| r.baseline).collect();
        let ml_rmse = rmse(&hybrid, &labels)?;
        let baseline_rmse = rmse(&baseline, &labels)?;
        let ml_r2 = r_squared(&hybrid, &labels).ok();
        let baseline_r2 = r_squared(&baseline, &labels).ok();
        let alt: Vec<f64> = rows.iter().filter_map(|r| r.hybrid_alt).collect();
        let (alt_rmse, alt_r2) = if alt.len() == rows.len() && !rows.is_empty() {
            (Some(rmse(&alt, &labels)?), r_squared(&alt, &labels).ok())
        } else {
            (None, None)
        };
        Ok(Aggregates {
            ml_rmse,
            ml_r2,
            baseline_rmse,
            baseline_r2,
            alt_rmse,
            alt_r2,
        })
    }
}

/// The trained corrector and its inputs for one evaluation year; kept for
/// attribution analysis and auditing.
#[derive(Debug, Clone)]
pub struct StepArtifacts {
    pub year: i32,
    pub ensemble: TreeEnsemble,
    pub train: Vec<TrainingTuple>,
    pub test: TrainingTuple,
    pub hybrid: f64,
}

fn fit_and_predict(
    train: &[TrainingTuple],
    test: &TrainingTuple,
    hp: &GbtHyperParams,
) -> Result<(TreeEnsemble, f64), HybridError> {
    let features: Vec<FeatureVector> = train.iter().map(|t| t.features.clone()).collect();
    let labels: Vec<f64> = train.iter().map(|t| t.label).collect();
    let ensemble = stockcast_gbt::fit(&features, &labels, hp)?;
    let prediction = stockcast_gbt::predict(&ensemble, &test.features)?;
    Ok((ensemble, prediction))
}

/// Train on the dataset's tuples and predict its test tuple.
pub fn hybrid_prediction(
    train: &[TrainingTuple],
    test: &TrainingTuple,
    hp: &GbtHyperParams,
) -> Result<f64, HybridError> {
    Ok(fit_and_predict(train, test, hp)?.1)
}

/// One evaluation year: baseline, corrected prediction(s) and label.
#[allow(clippy::too_many_arguments)]
pub fn run_task(
    spec: &TaskSpec,
    models: &BTreeMap<i32, Arc<FittedAssessment>>,
    obs: &ObservationSeries,
    bio: &BiologySeries,
    labels: &StockParameterSeries,
    year: i32,
    hp: &GbtHyperParams,
) -> Result<(ReportRow, StepArtifacts, usize), HybridError> {
    let dataset = build_dataset(spec, models, obs, bio, labels, year)?;
    let baseline = dataset.baseline(spec);
    let (ensemble, hybrid) = fit_and_predict(&dataset.train, &dataset.test, hp)?;
    let mut violations =
        audit_provenance(dataset.train.iter().chain(std::iter::once(&dataset.test)));

    let hybrid_alt = match spec.alternate_variant() {
        None => None,
        Some(variant) => {
            let alt_spec = TaskSpec {
                feature_variant: variant,
                ..*spec
            };
            let alt: Dataset = build_dataset(&alt_spec, models, obs, bio, labels, year)?;
            violations += audit_provenance(alt.train.iter().chain(std::iter::once(&alt.test)));
            Some(hybrid_prediction(&alt.train, &alt.test, hp)?)
        }
    };

    let row = ReportRow {
        year,
        label: dataset.test.label,
        baseline,
        hybrid,
        hybrid_alt,
    };
    let artifacts = StepArtifacts {
        year,
        ensemble,
        train: dataset.train,
        test: dataset.test,
        hybrid,
    };
    Ok((row, artifacts, violations))
}

/// Expanding-window backtest over the last `k + 1` years of the series.
///
/// All required models are fitted once through the cache and shared
/// across evaluation years. Years whose models did not converge (or that
/// lack enough training tuples) are skipped and recorded.
#[allow(clippy::too_many_arguments)]
pub fn backtest(
    stock: &str,
    spec: &TaskSpec,
    obs: &ObservationSeries,
    bio: &BiologySeries,
    assess_cfg: &AssessorConfig,
    hp: &GbtHyperParams,
    k: usize,
    cache: &ModelCache,
) -> Result<(BacktestReport, Vec<StepArtifacts>), HybridError> {
    spec.validate()?;
    if k < 5 {
        return Err(HybridError::InvalidTask(format!(
            "k must be at least 5, got {k}"
        )));
    }
    let last = obs.last_year();
    let first_eval = last - k as i32;
    let first_fit = obs.first_year() + 9;
    if first_eval <= first_fit {
        return Err(HybridError::InvalidTask(format!(
            "series too short: first evaluation year {first_eval} needs models from {first_fit}"
        )));
    }

    let models = cache.fit_range(obs, bio, assess_cfg, first_fit..=last)?;
    let final_model = models
        .get(&last)
        .ok_or(HybridError::ModelUnavailable(last))?;
    if !final_model.converged {
        return Err(HybridError::EmptyReport(format!(
            "final model M_{last} did not converge"
        )));
    }
    let labels = make_labels(final_model, bio, spec.target)?;

    let mut rows = Vec::new();
    let mut artifacts = Vec::new();
    let mut skipped = Vec::new();
    let mut provenance_violations = 0usize;
    for year in first_eval..=last {
        match run_task(spec, &models, obs, bio, &labels, year, hp) {
            Ok((row, art, violations)) => {
                rows.push(row);
                artifacts.push(art);
                provenance_violations += violations;
            }
            Err(e) => skipped.push((year, e.to_string())),
        }
    }
    if rows.is_empty() {
        return Err(HybridError::EmptyReport(format!(
            "no evaluation year produced a row for {stock}"
        )));
    }

    let agg = BacktestReport::aggregates_from_rows(&rows)?;
    let report = BacktestReport {
        stock: stock.to_string(),
        task: spec.task,
        target: spec.target,
        feature_variant: spec.feature_variant,
        alt_variant: spec.alternate_variant(),
        label_policy: spec.label_policy,
        k,
        rows,
        skipped,
        ml_rmse: agg.ml_rmse,
        ml_r2: agg.ml_r2,
        baseline_rmse: agg.baseline_rmse,
        baseline_r2: agg.baseline_r2,
        alt_rmse: agg.alt_rmse,
        alt_r2: agg.alt_r2,
        provenance_violations,
    };
    Ok((report, artifacts))
}

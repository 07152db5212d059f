use serde::{Deserialize, Serialize};
use stockcast_core::ParameterKind;

use crate::HybridError;

/// Whether the corrector targets the current year or the next one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Estimation,
    Forecast,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Task::Estimation => write!(f, "estimation"),
            Task::Forecast => write!(f, "forecast"),
        }
    }
}

/// Which parts of the assessor output feed the corrector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureVariant {
    /// Age-structured abundance estimates plus observations (recruitment).
    AbundancePlusObs,
    /// The SSB estimate plus observations.
    SsbPlusObs,
    /// The SSB estimate alone.
    SsbOnly,
}

impl std::fmt::Display for FeatureVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FeatureVariant::AbundancePlusObs => "abundance_plus_obs",
            FeatureVariant::SsbPlusObs => "ssb_plus_obs",
            FeatureVariant::SsbOnly => "ssb_only",
        };
        write!(f, "{s}")
    }
}

/// Where training labels come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelPolicy {
    /// Labels from the final model fitted on all data: the standard
    /// protocol, relying on retrospective stability of the estimates.
    FinalModel,
    /// Training labels from the model available at each backtest step;
    /// earlier tuples then never move when data are appended.
    StrictPast,
}

/// Full specification of one correction task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task: Task,
    pub target: ParameterKind,
    pub feature_variant: FeatureVariant,
    pub label_policy: LabelPolicy,
}

impl TaskSpec {
    pub fn new(
        task: Task,
        target: ParameterKind,
        feature_variant: FeatureVariant,
        label_policy: LabelPolicy,
    ) -> Result<Self, HybridError> {
        let spec = Self {
            task,
            target,
            feature_variant,
            label_policy,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), HybridError> {
        match (self.target, self.feature_variant) {
            (ParameterKind::Recruitment, FeatureVariant::AbundancePlusObs) => Ok(()),
            (ParameterKind::Ssb, FeatureVariant::SsbPlusObs | FeatureVariant::SsbOnly) => Ok(()),
            (target, variant) => Err(HybridError::InvalidTask(format!(
                "target {target} cannot use feature variant {variant}"
            ))),
        }
    }

    /// The other SSB feature subset, when the target is SSB.
    pub fn alternate_variant(&self) -> Option<FeatureVariant> {
        match (self.target, self.feature_variant) {
            (ParameterKind::Ssb, FeatureVariant::SsbPlusObs) => Some(FeatureVariant::SsbOnly),
            (ParameterKind::Ssb, FeatureVariant::SsbOnly) => Some(FeatureVariant::SsbPlusObs),
            _ => None,
        }
    }
}

//! Run configuration: one TOML file drives every subcommand.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use stockcast_assess::{
    AssessorConfig, ForecastPolicy, OptimizerSettings, RecruitmentModel, SelectivityStart,
};
use stockcast_core::{AgeRange, ParameterKind};
use stockcast_gbt::GbtHyperParams;
use stockcast_hybrid::{FeatureVariant, LabelPolicy, Task, TaskSpec};
use stockcast_sim::SimConfig;

/// File-based inputs: long-form observation and biology tables.
#[derive(Debug, Clone, Deserialize)]
pub struct InputPaths {
    pub observations: PathBuf,
    pub biology: PathBuf,
    /// Whether the oldest age class is a plus group.
    #[serde(default = "default_true")]
    pub plus_group: bool,
}

fn default_true() -> bool {
    true
}

/// Optional overrides for the assessment model; anything omitted keeps
/// the defaults derived from the data's age range.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssessorOverrides {
    pub recruitment: Option<RecruitmentModel>,
    pub forecast_policy: Option<ForecastPolicy>,
    pub optimizer: Option<OptimizerSettings>,
    pub selectivity_start: Option<SelectivityStart>,
    pub initial_f: Option<f64>,
    pub prior_recruitment: Option<f64>,
    pub sigma_proc_start: Option<f64>,
    pub sigma_f_start: Option<f64>,
    pub sigma_obs_start: Option<f64>,
    pub catchability_start: Option<f64>,
}

impl AssessorOverrides {
    pub fn apply(&self, ages: AgeRange) -> AssessorConfig {
        let mut cfg = AssessorConfig::new(ages);
        if let Some(v) = self.recruitment {
            cfg.recruitment = v;
        }
        if let Some(v) = self.forecast_policy {
            cfg.forecast_policy = v;
        }
        if let Some(v) = &self.optimizer {
            cfg.optimizer = v.clone();
        }
        if let Some(v) = self.selectivity_start {
            cfg.selectivity_start = v;
        }
        if let Some(v) = self.initial_f {
            cfg.initial_f = v;
        }
        if let Some(v) = self.prior_recruitment {
            cfg.prior_recruitment = v;
        }
        if let Some(v) = self.sigma_proc_start {
            cfg.sigma_proc_start = v;
        }
        if let Some(v) = self.sigma_f_start {
            cfg.sigma_f_start = v;
        }
        if let Some(v) = self.sigma_obs_start {
            cfg.sigma_obs_start = v;
        }
        if let Some(v) = self.catchability_start {
            cfg.catchability_start = v;
        }
        cfg
    }
}

/// One correction task as written in the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskEntry {
    pub task: Task,
    pub target: ParameterKind,
    pub feature_variant: Option<FeatureVariant>,
    pub label_policy: Option<LabelPolicy>,
}

impl TaskEntry {
    pub fn resolve(&self, default_policy: LabelPolicy) -> Result<TaskSpec> {
        let variant = self.feature_variant.unwrap_or(match self.target {
            ParameterKind::Recruitment => FeatureVariant::AbundancePlusObs,
            ParameterKind::Ssb => FeatureVariant::SsbPlusObs,
        });
        let policy = self.label_policy.unwrap_or(default_policy);
        TaskSpec::new(self.task, self.target, variant, policy)
            .map_err(|e| anyhow::anyhow!("invalid task entry: {e}"))
    }
}

/// The full run configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub stock: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    pub inputs: Option<InputPaths>,
    pub simulation: Option<SimConfig>,
    #[serde(default)]
    pub assessor: AssessorOverrides,
    #[serde(default)]
    pub gbt: GbtHyperParams,
    #[serde(default)]
    pub tasks: Vec<TaskEntry>,
}

fn default_seed() -> u64 {
    42
}

fn default_k() -> usize {
    17
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        cfg.validate(path)?;
        // Simulated stocks draw all randomness from the single run seed.
        if let Some(sim) = &mut cfg.simulation {
            sim.seed = cfg.seed;
        }
        Ok(cfg)
    }

    fn validate(&self, path: &Path) -> Result<()> {
        match (&self.inputs, &self.simulation) {
            (Some(_), Some(_)) => {
                bail!(
                    "config {} sets both [inputs] and [simulation]; pick one",
                    path.display()
                )
            }
            (None, None) => {
                bail!(
                    "config {} needs either [inputs] or [simulation]",
                    path.display()
                )
            }
            _ => {}
        }
        if let Some(inputs) = &self.inputs {
            let base = path.parent().unwrap_or(Path::new("."));
            for (role, p) in [
                ("observations", &inputs.observations),
                ("biology", &inputs.biology),
            ] {
                let resolved = base.join(p);
                if !resolved.exists() {
                    bail!("{role} file {} does not exist", resolved.display());
                }
            }
        }
        Ok(())
    }

    /// Input paths resolved relative to the config file location.
    pub fn resolved_inputs(&self, config_path: &Path) -> Option<(PathBuf, PathBuf, bool)> {
        let base = config_path.parent().unwrap_or(Path::new("."));
        self.inputs.as_ref().map(|i| {
            (
                base.join(&i.observations),
                base.join(&i.biology),
                i.plus_group,
            )
        })
    }

    /// Default tasks when the config lists none: forecast and estimation
    /// for both targets under the final-model label policy.
    pub fn resolved_tasks(&self, policy_override: Option<LabelPolicy>) -> Result<Vec<TaskSpec>> {
        let default_policy = policy_override.unwrap_or(LabelPolicy::FinalModel);
        if self.tasks.is_empty() {
            let mut specs = Vec::new();
            for task in [Task::Forecast, Task::Estimation] {
                for target in [ParameterKind::Recruitment, ParameterKind::Ssb] {
                    let variant = match target {
                        ParameterKind::Recruitment => FeatureVariant::AbundancePlusObs,
                        ParameterKind::Ssb => FeatureVariant::SsbPlusObs,
                    };
                    specs.push(
                        TaskSpec::new(task, target, variant, default_policy)
                            .map_err(|e| anyhow::anyhow!("default task invalid: {e}"))?,
                    );
                }
            }
            Ok(specs)
        } else {
            self.tasks
                .iter()
                .map(|t| t.resolve(default_policy))
                .collect()
        }
    }
}

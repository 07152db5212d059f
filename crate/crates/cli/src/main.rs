//! Batch workflow for hybrid stock assessment: simulate synthetic
//! stocks, fit the state-space model, run retrospectives, evaluate the
//! ML-corrected predictions, and emit attribution plot data.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use stockcast_core::ParameterKind;
use stockcast_hybrid::{LabelPolicy, Task};

use stockcast_cli::commands;
use stockcast_cli::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "stockcast",
    about = "Hybrid fish-stock assessment: state-space model plus boosted-tree correction"
)]
struct Cli {
    /// Path to the run configuration (TOML).
    #[arg(long, global = true, default_value = "stockcast.toml")]
    config: PathBuf,

    /// Override the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic stock: truth, observations, biology.
    Simulate,
    /// Fit the assessment model on all data; write estimates and forecasts.
    Assess,
    /// Retrospective refits and the Mohn's rho diagnostic.
    Retro {
        /// Number of retrospective peels.
        #[arg(long, default_value_t = 5)]
        peels: usize,
    },
    /// Expanding-window evaluation of corrected vs. baseline predictions.
    Backtest {
        /// Number of evaluation years (the window covers k+1 years).
        #[arg(long)]
        k: Option<usize>,
        /// Label policy for training targets.
        #[arg(long, value_enum)]
        label_policy: Option<LabelPolicyArg>,
        /// Restrict to one task.
        #[arg(long, value_enum)]
        task: Option<TaskArg>,
        /// Restrict to one target parameter.
        #[arg(long, value_enum)]
        target: Option<TargetArg>,
    },
    /// Attribute the estimation-task corrector's predictions per feature.
    Shap {
        #[arg(long, value_enum, default_value = "recruitment")]
        target: TargetArg,
        #[arg(long, value_enum)]
        label_policy: Option<LabelPolicyArg>,
    },
    /// Render the stored backtest report as an aligned table.
    Report,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum LabelPolicyArg {
    FinalModel,
    StrictPast,
}

impl From<LabelPolicyArg> for LabelPolicy {
    fn from(v: LabelPolicyArg) -> Self {
        match v {
            LabelPolicyArg::FinalModel => LabelPolicy::FinalModel,
            LabelPolicyArg::StrictPast => LabelPolicy::StrictPast,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum TaskArg {
    Estimation,
    Forecast,
}

impl From<TaskArg> for Task {
    fn from(v: TaskArg) -> Self {
        match v {
            TaskArg::Estimation => Task::Estimation,
            TaskArg::Forecast => Task::Forecast,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum TargetArg {
    Recruitment,
    Ssb,
}

impl From<TargetArg> for ParameterKind {
    fn from(v: TargetArg) -> Self {
        match v {
            TargetArg::Recruitment => ParameterKind::Recruitment,
            TargetArg::Ssb => ParameterKind::Ssb,
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        if let Some(sim) = &mut cfg.simulation {
            sim.seed = seed;
        }
    }

    match cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg),
        Command::Assess => commands::cmd_assess(&cfg, &cli.config),
        Command::Retro { peels } => commands::cmd_retro(&cfg, &cli.config, peels),
        Command::Backtest {
            k,
            label_policy,
            task,
            target,
        } => commands::cmd_backtest(
            &cfg,
            &cli.config,
            k,
            label_policy.map(Into::into),
            task.map(Into::into),
            target.map(Into::into),
        )
        .map(|_| ()),
        Command::Shap {
            target,
            label_policy,
        } => commands::cmd_shap(
            &cfg,
            &cli.config,
            target.into(),
            label_policy.map(Into::into),
        ),
        Command::Report => commands::cmd_report(&cfg),
    }
}

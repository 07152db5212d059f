//! Corrected vs. baseline forecasts on five misspecified synthetic
//! stocks: an AR(1) environment drives recruitment, one survey's
//! catchability and natural mortality, none of which the assessment
//! model knows about.

use std::time::Instant;

use stockcast_assess::{AssessorConfig, RecruitmentModel};
use stockcast_core::ParameterKind;
use stockcast_gbt::GbtHyperParams;
use stockcast_hybrid::{backtest, FeatureVariant, LabelPolicy, ModelCache, Task, TaskSpec};
use stockcast_sim::{simulate, Environment, SimConfig};

fn main() {
    let env = Environment::Ar1 {
        phi: 0.85,
        sigma: 0.35,
        loading_recruitment: 0.6,
        loading_survey: 0.5,
        loading_mortality: 0.7,
    };
    let total = Instant::now();
    println!("stock      | rec ML / base    | ssb ML / base    |");
    for seed in 9000..9005u64 {
        let sim = SimConfig {
            seed,
            years: 45,
            environment: env.clone(),
            ..SimConfig::default()
        };
        let (_, obs, bio) = simulate(&sim).unwrap();
        let mut cfg = AssessorConfig::new(sim.ages);
        cfg.recruitment = RecruitmentModel::BevertonHolt {
            alpha_start: 2.0,
            beta_start: 0.001,
        };
        let cache = ModelCache::new();
        let hp = GbtHyperParams::default();

        let rec_spec = TaskSpec::new(
            Task::Forecast,
            ParameterKind::Recruitment,
            FeatureVariant::AbundancePlusObs,
            LabelPolicy::FinalModel,
        )
        .unwrap();
        let (rec, _) = backtest("demo", &rec_spec, &obs, &bio, &cfg, &hp, 17, &cache).unwrap();

        let ssb_spec = TaskSpec::new(
            Task::Forecast,
            ParameterKind::Ssb,
            FeatureVariant::SsbPlusObs,
            LabelPolicy::FinalModel,
        )
        .unwrap();
        let (ssb, _) = backtest("demo", &ssb_spec, &obs, &bio, &cfg, &hp, 17, &cache).unwrap();
        let ssb_ml = ssb.alt_rmse.map_or(ssb.ml_rmse, |alt| alt.min(ssb.ml_rmse));

        println!(
            "stock-{seed} | {:>7.0} / {:<7.0} | {:>7.0} / {:<7.0} |",
            rec.ml_rmse, rec.baseline_rmse, ssb_ml, ssb.baseline_rmse
        );
    }
    println!("total {:.0} s", total.elapsed().as_secs_f64());
}

//! Fit the assessment model to one simulated stock and print the
//! recovered parameters next to the generating values.

use std::time::Instant;

use stockcast_assess::{fit, AssessorConfig, RecruitmentModel};
use stockcast_core::recruitment_of;
use stockcast_sim::{simulate, SimConfig};

fn main() {
    let sim_cfg = SimConfig {
        years: 40,
        seed: 7,
        ..SimConfig::default()
    };
    let (truth, obs, bio) = simulate(&sim_cfg).unwrap();

    let mut cfg = AssessorConfig::new(sim_cfg.ages);
    cfg.recruitment = RecruitmentModel::BevertonHolt {
        alpha_start: 2.0,
        beta_start: 0.001,
    };

    let t0 = Instant::now();
    let fitted = fit(&obs, &bio, &cfg).unwrap();
    println!(
        "fit in {:.2} s: converged={}, nll={:.3}",
        t0.elapsed().as_secs_f64(),
        fitted.converged,
        fitted.nll
    );
    println!(
        "selectivity a50 {:.3} (true 2.5), slope {:.3} (true 2.0)",
        fitted.params.sel_a50, fitted.params.sel_slope
    );
    for (fleet, qs) in fitted.params.catchability.iter().enumerate() {
        println!("survey {fleet} catchability blocks: {qs:?}");
    }

    let mut sq = 0.0;
    let mut count = 0;
    for year in fitted.first_year..=fitted.last_data_year {
        let est = fitted.estimate(year).unwrap();
        let true_row = truth.abundance.row(year).unwrap();
        for (e, t) in est.values().iter().zip(true_row.values()) {
            sq += (e.ln() - t.ln()).powi(2);
            count += 1;
        }
    }
    println!(
        "smoothed log-abundance RMSE vs truth: {:.4}",
        (sq / count as f64).sqrt()
    );

    let forecast = fitted.forecast(&bio, 1).unwrap();
    println!(
        "terminal recruitment estimate {:.0}, one-year forecast {:.0} (thousands)",
        recruitment_of(&fitted.estimate(fitted.last_data_year).unwrap()),
        recruitment_of(&forecast)
    );
}

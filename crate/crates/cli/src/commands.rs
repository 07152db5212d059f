//! Subcommand implementations. Each command loads or simulates the data,
//! runs its piece of the pipeline, and writes tidy output files into the
//! configured output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use stockcast_assess::{derived_series, fit, mohns_rho, retrospective_matrix};
use stockcast_core::{BiologySeries, ObservationSeries, ParameterKind};
use stockcast_hybrid::{
    backtest, make_labels, BacktestReport, LabelPolicy, ModelCache, Task, TaskSpec,
};
use stockcast_shap::{aggregate_importance, tree_shap, Attribution};
use stockcast_sim::simulate;

use crate::config::RunConfig;
use crate::io;

/// Data resolved from either the simulation section or the input files.
pub struct LoadedData {
    pub obs: ObservationSeries,
    pub bio: BiologySeries,
}

pub fn load_data(cfg: &RunConfig, config_path: &Path) -> Result<LoadedData> {
    if let Some(sim_cfg) = &cfg.simulation {
        let (_, obs, bio) = simulate(sim_cfg).context("simulation failed")?;
        Ok(LoadedData { obs, bio })
    } else {
        let (obs_path, bio_path, plus_group) = cfg
            .resolved_inputs(config_path)
            .expect("validated config has inputs");
        let (obs, bio) = io::load_observations(&obs_path, &bio_path, plus_group)?;
        Ok(LoadedData { obs, bio })
    }
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create output directory {}", cfg.out_dir.display()))?;
    Ok(cfg.out_dir.clone())
}

/// `simulate`: write the synthetic truth, observations and biology.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    let Some(sim_cfg) = &cfg.simulation else {
        bail!("the simulate command needs a [simulation] section");
    };
    let out = ensure_out_dir(cfg)?;
    let (truth, obs, bio) = simulate(sim_cfg).context("simulation failed")?;
    io::write_observations(&out.join("observations.csv"), &obs)?;
    io::write_biology(&out.join("biology.csv"), &bio)?;
    io::write_truth(&out.join("truth.csv"), &truth)?;
    println!(
        "simulated {} years of stock {} into {}",
        sim_cfg.years,
        cfg.stock,
        out.display()
    );
    Ok(())
}

/// `assess`: fit the full-data model; write the fitted model and derived
/// estimate/forecast series.
pub fn cmd_assess(cfg: &RunConfig, config_path: &Path) -> Result<()> {
    let data = load_data(cfg, config_path)?;
    let out = ensure_out_dir(cfg)?;
    let assess_cfg = cfg.assessor.apply(data.bio.ages());
    let fitted = fit(&data.obs, &data.bio, &assess_cfg).context("assessment fit failed")?;
    if !fitted.converged {
        bail!("assessment model did not converge");
    }
    io::write_atomic(&out.join("assessment.json"), &fitted.to_json())?;

    let (rec, ssb) = derived_series(&fitted, &data.bio)?;
    let mut table = String::from("year\tquantity\tvalue\tsource\n");
    for (series, name) in [(&rec, "recruitment"), (&ssb, "ssb")] {
        for (year, value) in series.iter() {
            let source = if year == fitted.last_data_year {
                "filtered"
            } else {
                "smoothed"
            };
            writeln!(table, "{year}\t{name}\t{value}\t{source}").expect("string write");
        }
    }
    for (year, f) in fitted.fishing_intensity() {
        writeln!(table, "{year}\tfishing_intensity\t{f}\tsmoothed").expect("string write");
    }
    let forecast = fitted.forecast(&data.bio, 1)?;
    let ages = data.bio.ages();
    for age in ages.ages() {
        let idx = ages.index_of(age).unwrap();
        writeln!(
            table,
            "{}\tN_a{age}\t{}\tforecast",
            forecast.year(),
            forecast.values()[idx]
        )
        .expect("string write");
    }
    let rec_fc =
        stockcast_assess::derive_parameter(&forecast, &data.bio, ParameterKind::Recruitment)?;
    let ssb_fc = stockcast_assess::derive_parameter(&forecast, &data.bio, ParameterKind::Ssb)?;
    writeln!(
        table,
        "{}\trecruitment\t{rec_fc}\tforecast",
        forecast.year()
    )
    .expect("string write");
    writeln!(table, "{}\tssb\t{ssb_fc}\tforecast", forecast.year()).expect("string write");
    io::write_atomic(&out.join("estimates.tsv"), &table)?;
    println!(
        "fitted M_{} (nll {:.3}); wrote assessment.json and estimates.tsv",
        fitted.last_data_year, fitted.nll
    );
    Ok(())
}

/// `retro`: retrospective refits, the retro matrix and Mohn's rho.
pub fn cmd_retro(cfg: &RunConfig, config_path: &Path, peels: usize) -> Result<()> {
    let data = load_data(cfg, config_path)?;
    let out = ensure_out_dir(cfg)?;
    let assess_cfg = cfg.assessor.apply(data.bio.ages());
    let last = data.obs.last_year();
    let first_t = last - peels as i32;
    let retro = retrospective_matrix(&data.obs, &data.bio, &assess_cfg, first_t)
        .context("retrospective fits failed")?;
    io::write_atomic(&out.join("retro.tsv"), &io::render_retro(&retro))?;

    let mut rho_rows = Vec::new();
    for kind in [ParameterKind::Recruitment, ParameterKind::Ssb] {
        let rho = mohns_rho(&retro, kind, peels).context("Mohn's rho failed")?;
        if rho.excluded > 0 {
            eprintln!(
                "warning: {} peel(s) excluded from Mohn's rho for {kind}",
                rho.excluded
            );
        }
        println!("Mohn's rho ({kind}, {peels} peels): {:+.4}", rho.rho);
        rho_rows.push((kind, peels, rho));
    }
    io::write_atomic(&out.join("mohns_rho.tsv"), &io::render_mohns_rho(&rho_rows))?;
    Ok(())
}

/// `backtest`: expanding-window evaluation for every configured task.
pub fn cmd_backtest(
    cfg: &RunConfig,
    config_path: &Path,
    k_override: Option<usize>,
    policy_override: Option<LabelPolicy>,
    task_filter: Option<Task>,
    target_filter: Option<ParameterKind>,
) -> Result<Vec<BacktestReport>> {
    let data = load_data(cfg, config_path)?;
    let out = ensure_out_dir(cfg)?;
    let assess_cfg = cfg.assessor.apply(data.bio.ages());
    let k = k_override.unwrap_or(cfg.k);
    let specs: Vec<TaskSpec> = cfg
        .resolved_tasks(policy_override)?
        .into_iter()
        .filter(|s| task_filter.is_none_or(|t| s.task == t))
        .filter(|s| target_filter.is_none_or(|t| s.target == t))
        .collect();
    if specs.is_empty() {
        bail!("no tasks selected");
    }

    let cache = ModelCache::new();
    let mut reports = Vec::new();
    for spec in &specs {
        let (report, _) = backtest(
            &cfg.stock,
            spec,
            &data.obs,
            &data.bio,
            &assess_cfg,
            &cfg.gbt,
            k,
            &cache,
        )
        .with_context(|| format!("backtest failed for {} {}", spec.task, spec.target))?;
        println!(
            "{} {} {}: ML RMSE {} vs baseline {} over {} years ({} skipped)",
            cfg.stock,
            spec.task,
            spec.target,
            io::format_rmse(report.ml_rmse),
            io::format_rmse(report.baseline_rmse),
            report.rows.len(),
            report.skipped.len(),
        );
        reports.push(report);
    }
    io::write_atomic(
        &out.join("report.tsv"),
        &io::render_report_summary(&reports),
    )?;
    io::write_atomic(
        &out.join("report_rows.tsv"),
        &io::render_report_rows(&reports),
    )?;
    Ok(reports)
}

/// `shap`: train the estimation-task corrector on the full series and
/// attribute every year's prediction; write per-sample records and the
/// aggregate importance ranking.
pub fn cmd_shap(
    cfg: &RunConfig,
    config_path: &Path,
    target: ParameterKind,
    policy_override: Option<LabelPolicy>,
) -> Result<()> {
    let data = load_data(cfg, config_path)?;
    let out = ensure_out_dir(cfg)?;
    let assess_cfg = cfg.assessor.apply(data.bio.ages());
    let policy = policy_override.unwrap_or(LabelPolicy::FinalModel);
    let spec = TaskSpec::new(
        Task::Estimation,
        target,
        match target {
            ParameterKind::Recruitment => stockcast_hybrid::FeatureVariant::AbundancePlusObs,
            ParameterKind::Ssb => stockcast_hybrid::FeatureVariant::SsbPlusObs,
        },
        policy,
    )
    .map_err(|e| anyhow::anyhow!("invalid shap task: {e}"))?;

    let cache = ModelCache::new();
    let last = data.obs.last_year();
    let first_fit = data.obs.first_year() + 9;
    let models = cache.fit_range(&data.obs, &data.bio, &assess_cfg, first_fit..=last)?;
    let final_model = models
        .get(&last)
        .filter(|m| m.converged)
        .ok_or_else(|| anyhow::anyhow!("final model did not converge"))?;
    let labels = make_labels(final_model, &data.bio, target)?;
    let dataset =
        stockcast_hybrid::build_dataset(&spec, &models, &data.obs, &data.bio, &labels, last)?;

    let train_features: Vec<_> = dataset.train.iter().map(|t| t.features.clone()).collect();
    let train_labels: Vec<f64> = dataset.train.iter().map(|t| t.label).collect();
    let ensemble = stockcast_gbt::fit(&train_features, &train_labels, &cfg.gbt)?;

    let mut attributions: Vec<(i32, Attribution)> = Vec::new();
    for tuple in dataset.train.iter().chain(std::iter::once(&dataset.test)) {
        let attr = tree_shap(&ensemble, &tuple.features, &train_features)?;
        attributions.push((tuple.target_year, attr));
    }

    let mut sample_table = String::from("year\tfeature\tfeature_value\tphi\n");
    for (year, attr) in &attributions {
        let tuple = dataset
            .train
            .iter()
            .chain(std::iter::once(&dataset.test))
            .find(|t| t.target_year == *year)
            .expect("attributed tuple exists");
        for (name, phi) in &attr.contributions {
            let value = tuple.features.get(name).flatten();
            writeln!(
                sample_table,
                "{year}\t{name}\t{}\t{phi}",
                value.map(|v| v.to_string()).unwrap_or_default()
            )
            .expect("string write");
        }
    }
    io::write_atomic(&out.join("shap.tsv"), &sample_table)?;

    let ranked = aggregate_importance(
        &attributions
            .iter()
            .map(|(_, a)| a.clone())
            .collect::<Vec<_>>(),
    )?;
    let mut importance = String::from("rank\tfeature\tmean_abs_phi\n");
    for (rank, (feature, value)) in ranked.iter().enumerate() {
        writeln!(importance, "{}\t{feature}\t{value}", rank + 1).expect("string write");
    }
    io::write_atomic(&out.join("shap_importance.tsv"), &importance)?;
    println!(
        "attributed {} predictions for {target}; top feature: {}",
        attributions.len(),
        ranked.first().map(|(f, _)| f.as_str()).unwrap_or("-")
    );
    Ok(())
}

/// `report`: render the stored backtest summary as an aligned table.
pub fn cmd_report(cfg: &RunConfig) -> Result<()> {
    let path = cfg.out_dir.join("report.tsv");
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("cannot read {}; run backtest first", path.display()))?;
    print!("{}", render_stored_summary(&text)?);
    Ok(())
}

/// Re-render a stored summary TSV without recomputing anything.
pub fn render_stored_summary(tsv: &str) -> Result<String> {
    let mut lines = tsv.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split('\t').collect();
    let col = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| anyhow::anyhow!("report.tsv lacks column {name}"))
    };
    let (c_stock, c_task, c_target) = (col("stock")?, col("task")?, col("target")?);
    let (c_ml_rmse, c_ml_r2) = (col("ml_rmse")?, col("ml_r2")?);
    let (c_b_rmse, c_b_r2) = (col("baseline_rmse")?, col("baseline_r2")?);

    let mut rows: Vec<[String; 5]> = vec![[
        "stock/task/target".into(),
        "ML RMSE".into(),
        "ML R2".into(),
        "base RMSE".into(),
        "base R2".into(),
    ]];
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        let num = |i: usize| f.get(i).unwrap_or(&"").parse::<f64>().ok();
        rows.push([
            format!("{} {} {}", f[c_stock], f[c_task], f[c_target]),
            num(c_ml_rmse)
                .map(io::format_rmse)
                .unwrap_or_else(|| "-".into()),
            io::format_r2(num(c_ml_r2)),
            num(c_b_rmse)
                .map(io::format_rmse)
                .unwrap_or_else(|| "-".into()),
            io::format_r2(num(c_b_r2)),
        ]);
    }
    let widths: Vec<usize> = (0..5)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let rendered: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| format!("{cell:>width$}", width = widths[c]))
            .collect();
        writeln!(out, "{}", rendered.join("  ")).expect("string write");
    }
    Ok(out)
}

//! File formats and atomic writes.
//!
//! Long-form delimited text throughout, one record per line:
//!
//! * `observations.csv` — `fleet,kind,timing,year,age,value`; `kind` is
//!   `commercial_catch` or `survey`, `timing` is the survey's fraction of
//!   the year (empty for catch fleets). Missing cells are absent rows.
//! * `biology.csv` — `quantity,year,age,value` with quantity one of
//!   `weight`, `maturity`, `natural_mortality`.
//! * `truth.csv` — `series,year,age,value`; per-age series carry an age,
//!   scalar series (environment, recruitment, ssb) leave it empty.
//! * `report.tsv` / `report_rows.tsv` — backtest summaries and per-year
//!   rows, tab-separated with headers.
//! * `retro.tsv`, `mohns_rho.tsv`, `shap.tsv`, `shap_importance.tsv` —
//!   tidy plot data.
//!
//! Every float is written in shortest round-trip form, so emitted files
//! reload bit-exactly and byte-identical reruns mean identical results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use stockcast_assess::{MohnsRho, RetroMatrix};
use stockcast_core::{
    AgeRange, BiologySeries, FleetKind, FleetObservation, ObservationSeries, ParameterKind,
};
use stockcast_hybrid::BacktestReport;
use stockcast_sim::TrueTrajectory;

/// Write via a temporary file and rename, so readers never see a partial
/// file and failed runs never clobber previous outputs.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content).with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("cannot move {} into place", path.display()))?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

// --- observations ---

pub fn write_observations(path: &Path, obs: &ObservationSeries) -> Result<()> {
    let mut out = String::from("fleet,kind,timing,year,age,value\n");
    for fleet in obs.fleets() {
        let (kind, timing) = match fleet.kind() {
            FleetKind::CommercialCatch => ("commercial_catch", String::new()),
            FleetKind::Survey { timing } => ("survey", timing.to_string()),
        };
        for year in fleet.first_year()..=fleet.last_year() {
            let Some(row) = fleet.row(year) else { continue };
            for (idx, cell) in row.iter().enumerate() {
                if let Some(value) = cell {
                    let age = fleet.ages().min_age() + idx as u32;
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        fleet.name(),
                        kind,
                        timing,
                        year,
                        age,
                        value
                    )
                    .expect("string write");
                }
            }
        }
    }
    write_atomic(path, &out)
}

struct ObsRecord {
    fleet: String,
    kind: String,
    timing: Option<f64>,
    year: i32,
    age: u32,
    value: f64,
}

fn parse_line<const N: usize>(path: &Path, line_no: usize, line: &str) -> Result<[String; N]> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != N {
        bail!(
            "{}:{}: expected {} comma-separated fields, got {}",
            path.display(),
            line_no,
            N,
            fields.len()
        );
    }
    Ok(std::array::from_fn(|i| fields[i].trim().to_string()))
}

fn parse_num<T: std::str::FromStr>(
    path: &Path,
    line_no: usize,
    column: &str,
    raw: &str,
) -> Result<T> {
    raw.parse().map_err(|_| {
        anyhow::anyhow!(
            "{}:{}: cannot parse {column} from {raw:?}",
            path.display(),
            line_no
        )
    })
}

/// Load observations and biology files; ages and years are inferred from
/// the data, gap cells stay missing.
pub fn load_observations(
    obs_path: &Path,
    bio_path: &Path,
    plus_group: bool,
) -> Result<(ObservationSeries, BiologySeries)> {
    let obs_text = std::fs::read_to_string(obs_path)
        .with_context(|| format!("cannot read observations {}", obs_path.display()))?;
    let mut records = Vec::new();
    for (i, line) in obs_text.lines().enumerate() {
        if i == 0 {
            if line.trim() != "fleet,kind,timing,year,age,value" {
                bail!("{}:1: unexpected header {line:?}", obs_path.display());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let [fleet, kind, timing, year, age, value] = parse_line(obs_path, line_no, line)?;
        let record = ObsRecord {
            fleet,
            timing: if timing.is_empty() {
                None
            } else {
                Some(parse_num(obs_path, line_no, "timing", &timing)?)
            },
            year: parse_num(obs_path, line_no, "year", &year)?,
            age: parse_num(obs_path, line_no, "age", &age)?,
            value: parse_num(obs_path, line_no, "value", &value)?,
            kind,
        };
        if record.value <= 0.0 {
            bail!(
                "{}:{}: observation values must be positive (log-scale model), got {}",
                obs_path.display(),
                line_no,
                record.value
            );
        }
        match record.kind.as_str() {
            "commercial_catch" | "survey" => {}
            other => bail!(
                "{}:{}: unknown fleet kind {other:?}",
                obs_path.display(),
                line_no
            ),
        }
        records.push(record);
    }
    if records.is_empty() {
        bail!("{}: no observation records", obs_path.display());
    }

    let bio = load_biology(bio_path, plus_group)?;
    let ages = bio.ages();

    // Group per fleet, preserving first-appearance order.
    let mut order: Vec<String> = Vec::new();
    for r in &records {
        if !order.contains(&r.fleet) {
            order.push(r.fleet.clone());
        }
    }
    let mut fleets = Vec::new();
    for name in order {
        let rows: Vec<&ObsRecord> = records.iter().filter(|r| r.fleet == name).collect();
        let kind = match rows[0].kind.as_str() {
            "commercial_catch" => FleetKind::CommercialCatch,
            _ => FleetKind::Survey {
                timing: rows[0].timing.unwrap_or(0.0),
            },
        };
        let first_year = rows.iter().map(|r| r.year).min().unwrap();
        let last_year = rows.iter().map(|r| r.year).max().unwrap();
        let mut values = vec![vec![None; ages.len()]; (last_year - first_year + 1) as usize];
        for r in rows {
            let Some(age_idx) = ages.index_of(r.age) else {
                bail!(
                    "{}: fleet {} observes age {} outside the biology age range {}..={}",
                    obs_path.display(),
                    name,
                    r.age,
                    ages.min_age(),
                    ages.max_age()
                );
            };
            values[(r.year - first_year) as usize][age_idx] = Some(r.value);
        }
        fleets.push(FleetObservation::new(name, kind, ages, first_year, values)?);
    }
    Ok((ObservationSeries::new(fleets)?, bio))
}

// --- biology ---

pub fn write_biology(path: &Path, bio: &BiologySeries) -> Result<()> {
    let mut out = String::from("quantity,year,age,value\n");
    let ages = bio.ages();
    for year in bio.first_year()..=bio.last_year() {
        for (quantity, row) in [
            ("weight", bio.weight_row(year)?),
            ("maturity", bio.maturity_row(year)?),
            ("natural_mortality", bio.natural_mortality_row(year)?),
        ] {
            for (idx, value) in row.iter().enumerate() {
                let age = ages.min_age() + idx as u32;
                writeln!(out, "{quantity},{year},{age},{value}").expect("string write");
            }
        }
    }
    write_atomic(path, &out)
}

pub fn load_biology(path: &Path, plus_group: bool) -> Result<BiologySeries> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read biology {}", path.display()))?;
    let mut cells: BTreeMap<(String, i32, u32), f64> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line.trim() != "quantity,year,age,value" {
                bail!("{}:1: unexpected header {line:?}", path.display());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let [quantity, year, age, value] = parse_line(path, line_no, line)?;
        if !matches!(
            quantity.as_str(),
            "weight" | "maturity" | "natural_mortality"
        ) {
            bail!(
                "{}:{}: unknown quantity {quantity:?}",
                path.display(),
                line_no
            );
        }
        cells.insert(
            (
                quantity,
                parse_num(path, line_no, "year", &year)?,
                parse_num(path, line_no, "age", &age)?,
            ),
            parse_num(path, line_no, "value", &value)?,
        );
    }
    if cells.is_empty() {
        bail!("{}: no biology records", path.display());
    }
    let min_age = cells.keys().map(|(_, _, a)| *a).min().unwrap();
    let max_age = cells.keys().map(|(_, _, a)| *a).max().unwrap();
    let first_year = cells.keys().map(|(_, y, _)| *y).min().unwrap();
    let last_year = cells.keys().map(|(_, y, _)| *y).max().unwrap();
    let ages = AgeRange::new(min_age, max_age, plus_group)?;

    let table = |quantity: &str| -> Result<Vec<Vec<f64>>> {
        let mut rows = Vec::new();
        for year in first_year..=last_year {
            let mut row = Vec::with_capacity(ages.len());
            for age in ages.ages() {
                let Some(v) = cells.get(&(quantity.to_string(), year, age)) else {
                    bail!(
                        "{}: missing {quantity} for year {year} age {age}",
                        path.display()
                    );
                };
                row.push(*v);
            }
            rows.push(row);
        }
        Ok(rows)
    };
    let weight = table("weight")?;
    let maturity = table("maturity")?;
    let natural = table("natural_mortality")?;
    Ok(BiologySeries::new(
        ages, first_year, weight, maturity, natural,
    )?)
}

// --- truth ---

pub fn write_truth(path: &Path, truth: &TrueTrajectory) -> Result<()> {
    let mut out = String::from("series,year,age,value\n");
    let ages = truth.abundance.ages();
    for row in truth.abundance.rows() {
        for (idx, value) in row.values().iter().enumerate() {
            writeln!(
                out,
                "abundance,{},{},{}",
                row.year(),
                ages.min_age() + idx as u32,
                value
            )
            .expect("string write");
        }
    }
    for (offset, fs) in truth.fishing_mortality.iter().enumerate() {
        let year = truth.first_year() + offset as i32;
        for (idx, value) in fs.iter().enumerate() {
            writeln!(
                out,
                "fishing_mortality,{},{},{}",
                year,
                ages.min_age() + idx as u32,
                value
            )
            .expect("string write");
        }
    }
    for (offset, e) in truth.environment.iter().enumerate() {
        writeln!(
            out,
            "environment,{},,{}",
            truth.first_year() + offset as i32,
            e
        )
        .expect("string write");
    }
    for (year, v) in truth.recruitment.iter() {
        writeln!(out, "recruitment,{year},,{v}").expect("string write");
    }
    for (year, v) in truth.ssb.iter() {
        writeln!(out, "ssb,{year},,{v}").expect("string write");
    }
    write_atomic(path, &out)
}

/// Reload a truth table written by [`write_truth`].
#[allow(clippy::type_complexity)]
pub fn load_truth(path: &Path) -> Result<(BTreeMap<(String, i32, Option<u32>), f64>, Vec<String>)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read truth {}", path.display()))?;
    let mut cells = BTreeMap::new();
    let mut series = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line.trim() != "series,year,age,value" {
                bail!("{}:1: unexpected header {line:?}", path.display());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let [name, year, age, value] = parse_line(path, line_no, line)?;
        let age = if age.is_empty() {
            None
        } else {
            Some(parse_num(path, line_no, "age", &age)?)
        };
        if !series.contains(&name) {
            series.push(name.clone());
        }
        cells.insert(
            (name, parse_num(path, line_no, "year", &year)?, age),
            parse_num(path, line_no, "value", &value)?,
        );
    }
    Ok((cells, series))
}

// --- backtest reports ---

pub fn render_report_summary(reports: &[BacktestReport]) -> String {
    let mut out = String::from(
        "stock\ttask\ttarget\tvariant\tlabel_policy\tk\tn_years\tn_skipped\tml_rmse\tml_r2\tbaseline_rmse\tbaseline_r2\talt_variant\talt_rmse\talt_r2\tprovenance_violations\n",
    );
    for r in reports {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:?}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.stock,
            r.task,
            r.target,
            r.feature_variant,
            r.label_policy,
            r.k,
            r.rows.len(),
            r.skipped.len(),
            r.ml_rmse,
            fmt_opt(r.ml_r2),
            r.baseline_rmse,
            fmt_opt(r.baseline_r2),
            r.alt_variant.map(|v| v.to_string()).unwrap_or_default(),
            fmt_opt(r.alt_rmse),
            fmt_opt(r.alt_r2),
            r.provenance_violations,
        )
        .expect("string write");
    }
    out
}

pub fn render_report_rows(reports: &[BacktestReport]) -> String {
    let mut out = String::from("stock\ttask\ttarget\tyear\tlabel\tbaseline\thybrid\thybrid_alt\n");
    for r in reports {
        for row in &r.rows {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.stock,
                r.task,
                r.target,
                row.year,
                row.label,
                row.baseline,
                row.hybrid,
                fmt_opt(row.hybrid_alt),
            )
            .expect("string write");
        }
        for (year, reason) in &r.skipped {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\tskipped: {}\t\t\t",
                r.stock, r.task, r.target, year, reason
            )
            .expect("string write");
        }
    }
    out
}

// --- retrospective ---

pub fn render_retro(retro: &RetroMatrix) -> String {
    let mut out = String::from("model_year\tkind\tyear\tvalue\n");
    for kind in [ParameterKind::Recruitment, ParameterKind::Ssb] {
        for (t, series) in retro.series(kind) {
            for (year, value) in series.iter() {
                writeln!(out, "{t}\t{kind}\t{year}\t{value}").expect("string write");
            }
        }
    }
    out
}

pub fn render_mohns_rho(rows: &[(ParameterKind, usize, MohnsRho)]) -> String {
    let mut out = String::from("kind\tpeels\trho\tpeels_used\texcluded\n");
    for (kind, peels, rho) in rows {
        writeln!(
            out,
            "{kind}\t{peels}\t{}\t{}\t{}",
            rho.rho, rho.peels_used, rho.excluded
        )
        .expect("string write");
    }
    out
}

// --- table rendering (the `report` subcommand) ---

/// RMSE in report-table style: no decimals.
pub fn format_rmse(v: f64) -> String {
    format!("{v:.0}")
}

/// R-squared in report-table style: three decimals, `-` when undefined.
pub fn format_r2(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.3}"),
        None => "-".to_string(),
    }
}

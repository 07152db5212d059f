//! Process dynamics, observation generation and the full simulation loop.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use stockcast_core::{
    baranov_catch, ssb, AbundanceMatrix, AbundanceVector, BiologySeries, FleetKind,
    FleetObservation, ObservationSeries, ParameterKind, StockParameterSeries,
};

use crate::config::{Environment, FishingPath, SimConfig};
use crate::streams::{normal, SimStreams};
use crate::SimError;

/// Numerical floor before taking logs of expected recruitment.
const RECRUITMENT_FLOOR: f64 = 1e-12;
const EQUILIBRIUM_MAX_YEARS: usize = 10_000;

/// Expected recruits (thousands) from spawning stock biomass (tonnes):
/// `alpha * ssb / (1 + beta * ssb)`.
pub fn beverton_holt(ssb_tonnes: f64, alpha: f64, beta: f64) -> Result<f64, SimError> {
    if ssb_tonnes < 0.0 || !ssb_tonnes.is_finite() {
        return Err(SimError::Domain(format!(
            "SSB must be non-negative, got {ssb_tonnes}"
        )));
    }
    Ok(alpha * ssb_tonnes / (1.0 + beta * ssb_tonnes))
}

fn mortality_at(cfg: &SimConfig, env: f64) -> f64 {
    let loading = match cfg.environment {
        Environment::Ar1 {
            loading_mortality, ..
        } => loading_mortality,
        Environment::None => 0.0,
    };
    cfg.natural_mortality * (loading * env).exp()
}

fn spawning_biomass(n: &[f64], cfg: &SimConfig) -> f64 {
    n.iter()
        .zip(&cfg.weight_at_age)
        .zip(&cfg.maturity_at_age)
        .map(|((n_a, w), m)| n_a * w * m)
        .sum()
}

/// One deterministic year of dynamics: log-survival with total mortality
/// `Z_a = fishing_a + m`, plus-group accumulation, Beverton-Holt
/// recruitment from this year's SSB.
fn project(n: &[f64], fishing: &[f64], m: f64, cfg: &SimConfig) -> Result<Vec<f64>, SimError> {
    let n_ages = cfg.ages.len();
    let mut next = vec![0.0; n_ages];
    for target in 1..n_ages {
        next[target] = n[target - 1] * (-(fishing[target - 1] + m)).exp();
    }
    if cfg.ages.plus_group() {
        next[n_ages - 1] += n[n_ages - 1] * (-(fishing[n_ages - 1] + m)).exp();
    }
    next[0] = beverton_holt(spawning_biomass(n, cfg), cfg.bh_alpha, cfg.bh_beta)?;
    Ok(next)
}

/// One stochastic year: deterministic projection with log-normal noise per
/// transition and the environment loading on recruitment.
pub fn step_population(
    n: &AbundanceVector,
    fishing: &[f64],
    env: f64,
    cfg: &SimConfig,
    survival_rng: &mut impl Rng,
    recruitment_rng: &mut impl Rng,
) -> Result<AbundanceVector, SimError> {
    let projected = project(n.values(), fishing, mortality_at(cfg, env), cfg)?;
    let n_ages = cfg.ages.len();
    let mut next = vec![0.0; n_ages];
    for (target, value) in next.iter_mut().enumerate().skip(1) {
        let eps = normal_from(survival_rng, cfg.sigma_proc);
        *value = projected[target] * eps.exp();
    }
    let loading = match cfg.environment {
        Environment::Ar1 {
            loading_recruitment,
            ..
        } => loading_recruitment,
        Environment::None => 0.0,
    };
    let eta = normal_from(recruitment_rng, cfg.sigma_proc);
    next[0] = projected[0].max(RECRUITMENT_FLOOR) * (loading * env + eta).exp();
    AbundanceVector::new(n.year() + 1, cfg.ages, next).map_err(Into::into)
}

fn normal_from(rng: &mut impl Rng, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sigma * z
}

/// Fixed point of the noise-free dynamics at constant fishing intensity
/// `f`. Errors if the iteration does not settle or the stock collapses.
pub fn equilibrium_abundance(cfg: &SimConfig, f: f64) -> Result<Vec<f64>, SimError> {
    let fishing: Vec<f64> = cfg.selectivity.iter().map(|s| s * f).collect();
    let mut n = vec![1000.0; cfg.ages.len()];
    for _ in 0..EQUILIBRIUM_MAX_YEARS {
        let next = project(&n, &fishing, cfg.natural_mortality, cfg)?;
        if next[0] < 1e-9 {
            return Err(SimError::InvalidConfig(
                "stock collapses at equilibrium under these parameters".into(),
            ));
        }
        let delta = n
            .iter()
            .zip(&next)
            .map(|(a, b)| (a.max(1e-300).ln() - b.max(1e-300).ln()).abs())
            .fold(0.0f64, f64::max);
        n = next;
        if delta < 1e-12 {
            return Ok(n);
        }
    }
    Err(SimError::NonConvergentEquilibrium(EQUILIBRIUM_MAX_YEARS))
}

/// The unobserved state of one simulated stock.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueTrajectory {
    pub abundance: AbundanceMatrix,
    /// Fishing mortality per year (outer) and age (inner).
    pub fishing_mortality: Vec<Vec<f64>>,
    /// Environment path, one value per year (zeros when disabled).
    pub environment: Vec<f64>,
    pub recruitment: StockParameterSeries,
    pub ssb: StockParameterSeries,
}

impl TrueTrajectory {
    pub fn first_year(&self) -> i32 {
        self.abundance.first_year()
    }

    pub fn fishing_at(&self, year: i32) -> Option<&[f64]> {
        let offset = year.checked_sub(self.first_year())?;
        if offset < 0 {
            return None;
        }
        self.fishing_mortality
            .get(offset as usize)
            .map(|v| v.as_slice())
    }
}

/// Log-normal observations of a trajectory: commercial catches through the
/// Baranov equation, survey indices through catchability, survey timing
/// and (for the first survey fleet) the environment loading.
pub fn generate_observations(
    truth: &TrueTrajectory,
    cfg: &SimConfig,
) -> Result<ObservationSeries, SimError> {
    let mut streams = SimStreams::new(cfg.seed, cfg.fleets.len());
    generate_observations_with(truth, cfg, &mut streams)
}

fn generate_observations_with(
    truth: &TrueTrajectory,
    cfg: &SimConfig,
    streams: &mut SimStreams,
) -> Result<ObservationSeries, SimError> {
    let n_ages = cfg.ages.len();
    let loading_survey = match cfg.environment {
        Environment::Ar1 { loading_survey, .. } => loading_survey,
        Environment::None => 0.0,
    };
    let env_fleet = cfg.fleets.iter().position(|f| f.kind.is_survey());

    let mut fleets = Vec::with_capacity(cfg.fleets.len());
    for (fleet_idx, fleet_cfg) in cfg.fleets.iter().enumerate() {
        let rng = &mut streams.observation[fleet_idx];
        let mut rows: Vec<Vec<Option<f64>>> = Vec::with_capacity(truth.abundance.rows().len());
        for (year_idx, n_row) in truth.abundance.rows().iter().enumerate() {
            let fishing = &truth.fishing_mortality[year_idx];
            let env = truth.environment[year_idx];
            let mut row = vec![None; n_ages];
            let m_row = vec![mortality_at(cfg, env); n_ages];
            match fleet_cfg.kind {
                FleetKind::CommercialCatch => {
                    let catch = baranov_catch(n_row.values(), fishing, &m_row)?;
                    for (age_idx, cell) in row.iter_mut().enumerate() {
                        let noise = normal(rng, fleet_cfg.sigma_obs);
                        let value = catch[age_idx] * noise.exp();
                        // Zero expected catch cannot be logged; leave missing.
                        if catch[age_idx] > 1e-12 {
                            *cell = Some(value);
                        }
                    }
                }
                FleetKind::Survey { timing } => {
                    let env_term = if Some(fleet_idx) == env_fleet {
                        loading_survey * env
                    } else {
                        0.0
                    };
                    let q_of = |age_idx: usize| {
                        let age = cfg.ages.min_age() + age_idx as u32;
                        fleet_cfg
                            .catchability
                            .iter()
                            .find(|(a, _)| *a == age)
                            .map(|(_, q)| *q)
                    };
                    for (age_idx, cell) in row.iter_mut().enumerate() {
                        let noise = normal(rng, fleet_cfg.sigma_obs);
                        if let Some(q) = q_of(age_idx) {
                            let z = fishing[age_idx] + m_row[age_idx];
                            let value = q
                                * n_row.values()[age_idx]
                                * (-timing * z + env_term + noise).exp();
                            if value > 0.0 {
                                *cell = Some(value);
                            }
                        }
                    }
                }
            }
            rows.push(row);
        }
        fleets.push(FleetObservation::new(
            fleet_cfg.name.clone(),
            fleet_cfg.kind,
            cfg.ages,
            truth.first_year(),
            rows,
        )?);
    }
    ObservationSeries::new(fleets).map_err(Into::into)
}

/// Biology series implied by the config (constant over years).
pub fn biology_of(cfg: &SimConfig) -> Result<BiologySeries, SimError> {
    BiologySeries::constant(
        cfg.ages,
        cfg.first_year,
        cfg.years,
        cfg.weight_at_age.clone(),
        cfg.maturity_at_age.clone(),
        vec![cfg.natural_mortality; cfg.ages.len()],
    )
    .map_err(Into::into)
}

/// Run the full generator: equilibrium warm-up, stochastic dynamics,
/// observations. Deterministic given the config (all randomness flows
/// from `cfg.seed`).
pub fn simulate(
    cfg: &SimConfig,
) -> Result<(TrueTrajectory, ObservationSeries, BiologySeries), SimError> {
    cfg.validate()?;
    let mut streams = SimStreams::new(cfg.seed, cfg.fleets.len());
    let n_years = cfg.years;

    // Environment path (zeros when disabled; the stream is still private
    // to this component so toggling it does not affect others).
    let mut environment = vec![0.0; n_years];
    if let Environment::Ar1 { phi, sigma, .. } = cfg.environment {
        let stationary = sigma / (1.0 - phi * phi).sqrt();
        environment[0] = normal(&mut streams.environment, stationary);
        for t in 1..n_years {
            environment[t] = phi * environment[t - 1] + normal(&mut streams.environment, sigma);
        }
    }

    // Fishing intensity path.
    let f_path: Vec<f64> = match &cfg.fishing {
        FishingPath::Constant { f } => vec![*f; n_years],
        FishingPath::Path { values } => values.clone(),
        FishingPath::RandomWalk { f_init, sigma_f } => {
            let mut path = Vec::with_capacity(n_years);
            let mut log_f = f_init.ln();
            path.push(*f_init);
            for _ in 1..n_years {
                log_f += normal(&mut streams.fishing, *sigma_f);
                path.push(log_f.exp());
            }
            path
        }
    };
    let fishing_mortality: Vec<Vec<f64>> = f_path
        .iter()
        .map(|f| cfg.selectivity.iter().map(|s| s * f).collect())
        .collect();

    // Dynamics from the deterministic equilibrium at the initial intensity.
    let initial = equilibrium_abundance(cfg, cfg.fishing.initial_f())?;
    let mut rows = Vec::with_capacity(n_years);
    rows.push(AbundanceVector::new(cfg.first_year, cfg.ages, initial)?);
    for t in 0..n_years - 1 {
        let next = step_population(
            &rows[t],
            &fishing_mortality[t],
            environment[t],
            cfg,
            &mut streams.survival,
            &mut streams.recruitment,
        )?;
        rows.push(next);
    }
    let abundance = AbundanceMatrix::new(rows)?;

    let bio = biology_of(cfg)?;
    let recruitment = StockParameterSeries::new(
        ParameterKind::Recruitment,
        cfg.first_year,
        abundance.rows().iter().map(|r| r.values()[0]).collect(),
    )?;
    let ssb_series = StockParameterSeries::new(
        ParameterKind::Ssb,
        cfg.first_year,
        abundance
            .rows()
            .iter()
            .map(|r| ssb(r, &bio))
            .collect::<Result<Vec<_>, _>>()?,
    )?;

    let truth = TrueTrajectory {
        abundance,
        fishing_mortality,
        environment,
        recruitment,
        ssb: ssb_series,
    };
    let obs = generate_observations_with(&truth, cfg, &mut streams)?;
    Ok((truth, obs, bio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn beverton_holt_cases() {
        assert_eq!(beverton_holt(0.0, 2.0, 1.0).unwrap(), 0.0);
        assert_eq!(beverton_holt(1.0, 2.0, 1.0).unwrap(), 1.0);
        let near_asymptote = beverton_holt(1e9, 10.0, 0.1).unwrap();
        assert!((near_asymptote - 100.0).abs() < 1e-5);
        assert!(beverton_holt(-1.0, 2.0, 1.0).is_err());
    }

    fn noise_free_cfg() -> SimConfig {
        SimConfig {
            sigma_proc: 0.0,
            fishing: FishingPath::Constant { f: 0.2 },
            fleets: {
                let mut fleets = SimConfig::default().fleets;
                for f in &mut fleets {
                    f.sigma_obs = 0.0;
                }
                fleets
            },
            ..SimConfig::default()
        }
    }

    #[test]
    fn noise_free_cohort_decays_by_total_mortality() {
        let cfg = SimConfig {
            fishing: FishingPath::Constant { f: 0.0 },
            ..noise_free_cfg()
        };
        let n =
            AbundanceVector::new(1, cfg.ages, vec![100.0, 80.0, 60.0, 40.0, 20.0, 10.0]).unwrap();
        let fishing = vec![0.0; 6];
        let mut s = ChaCha8Rng::seed_from_u64(1);
        let mut r = ChaCha8Rng::seed_from_u64(2);
        let next = step_population(&n, &fishing, 0.0, &cfg, &mut s, &mut r).unwrap();
        let decay = (-cfg.natural_mortality).exp();
        for age_idx in 1..5 {
            assert!((next.values()[age_idx] - n.values()[age_idx - 1] * decay).abs() < 1e-9);
        }
        // Plus group accumulates the two oldest classes.
        let plus = (n.values()[4] + n.values()[5]) * decay;
        assert!((next.values()[5] - plus).abs() < 1e-9);
    }

    #[test]
    fn noise_free_survivors_with_fishing() {
        let cfg = noise_free_cfg();
        let f = 0.3;
        let fishing: Vec<f64> = cfg.selectivity.iter().map(|s| s * f).collect();
        let n = AbundanceVector::new(1, cfg.ages, vec![500.0; 6]).unwrap();
        let mut s = ChaCha8Rng::seed_from_u64(1);
        let mut r = ChaCha8Rng::seed_from_u64(2);
        let next = step_population(&n, &fishing, 0.0, &cfg, &mut s, &mut r).unwrap();
        for age_idx in 1..5 {
            let expected = 500.0 * (-(fishing[age_idx - 1] + cfg.natural_mortality)).exp();
            assert!((next.values()[age_idx] - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn log_survival_noise_is_centred() {
        // Monte-Carlo oracle: mean log-residual over 1e5 replicate steps
        // stays within 3 sigma / sqrt(n).
        let cfg = SimConfig {
            sigma_proc: 0.2,
            ..SimConfig::default()
        };
        let fishing = vec![0.1; 6];
        let n = AbundanceVector::new(1, cfg.ages, vec![1000.0; 6]).unwrap();
        let projected = 1000.0 * (-(0.1 + cfg.natural_mortality)).exp();
        let mut s = ChaCha8Rng::seed_from_u64(77);
        let mut r = ChaCha8Rng::seed_from_u64(78);
        let reps = 100_000;
        let mut sum = 0.0;
        for _ in 0..reps {
            let next = step_population(&n, &fishing, 0.0, &cfg, &mut s, &mut r).unwrap();
            sum += (next.values()[2] / projected).ln();
        }
        let mean = sum / reps as f64;
        let bound = 3.0 * cfg.sigma_proc / (reps as f64).sqrt();
        assert!(mean.abs() < bound, "mean {mean} exceeds {bound}");
    }

    #[test]
    fn exact_survey_with_unit_catchability_equals_truth() {
        let mut cfg = noise_free_cfg();
        cfg.fleets[1] = crate::config::FleetSimConfig::survey(
            "exact",
            0.0,
            0.0,
            (1..=6).map(|a| (a, 1.0)).collect(),
        );
        let (truth, obs, _) = simulate(&cfg).unwrap();
        let survey = obs.fleet("exact").unwrap();
        for row in truth.abundance.rows() {
            for age in cfg.ages.ages() {
                let idx = cfg.ages.index_of(age).unwrap();
                let observed = survey.value(row.year(), age).unwrap();
                assert!(
                    (observed - row.values()[idx]).abs() < 1e-9 * row.values()[idx].max(1.0),
                    "year {} age {age}: {observed} vs {}",
                    row.year(),
                    row.values()[idx]
                );
            }
        }
    }

    #[test]
    fn end_of_year_survey_sees_survivors() {
        let mut cfg = noise_free_cfg();
        cfg.fleets[1] = crate::config::FleetSimConfig::survey(
            "late",
            1.0,
            0.0,
            (1..=6).map(|a| (a, 1.0)).collect(),
        );
        let (truth, obs, _) = simulate(&cfg).unwrap();
        let survey = obs.fleet("late").unwrap();
        let year = truth.first_year();
        let fishing = truth.fishing_at(year).unwrap();
        for age in cfg.ages.ages() {
            let idx = cfg.ages.index_of(age).unwrap();
            let z = fishing[idx] + cfg.natural_mortality;
            let expected = truth.abundance.row(year).unwrap().values()[idx] * (-z).exp();
            let observed = survey.value(year, age).unwrap();
            assert!((observed - expected).abs() < 1e-9 * expected.max(1.0));
        }
    }

    #[test]
    fn survey_median_ratio_matches_catchability_discount() {
        // Median of index/truth over many replicate draws approaches
        // q * exp(-timing * Z) within 1%.
        let q = 0.5;
        let timing = 0.6;
        let sigma = 0.3;
        let mut cfg = SimConfig {
            years: 10,
            sigma_proc: 0.0,
            fishing: FishingPath::Constant { f: 0.25 },
            ..SimConfig::default()
        };
        cfg.fleets[1] = crate::config::FleetSimConfig::survey(
            "mc",
            timing,
            sigma,
            (1..=6).map(|a| (a, q)).collect(),
        );
        let (truth, _, _) = simulate(&cfg).unwrap();
        let year = cfg.first_year;
        let idx = 2;
        let z = truth.fishing_at(year).unwrap()[idx] + cfg.natural_mortality;
        let expected = q * (-timing * z).exp();
        let mut ratios = Vec::with_capacity(100_000);
        let n_true = truth.abundance.row(year).unwrap().values()[idx];
        for rep in 0..10_000 {
            let mut c = cfg.clone();
            c.seed = 1000 + rep;
            let obs = generate_observations(&truth, &c).unwrap();
            let v = obs.fleet("mc").unwrap().value(year, 3).unwrap();
            ratios.push(v / n_true);
        }
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = ratios[ratios.len() / 2];
        assert!(
            (median - expected).abs() / expected < 0.01,
            "median {median}, expected {expected}"
        );
    }

    #[test]
    fn same_seed_reproduces_bit_identical_outputs() {
        let cfg = SimConfig {
            environment: Environment::Ar1 {
                phi: 0.6,
                sigma: 0.3,
                loading_recruitment: 0.5,
                loading_survey: 0.4,
                loading_mortality: 0.0,
            },
            ..SimConfig::default()
        };
        let (t1, o1, b1) = simulate(&cfg).unwrap();
        let (t2, o2, b2) = simulate(&cfg).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(o1, o2);
        assert_eq!(b1, b2);
    }

    #[test]
    fn zero_noise_stays_at_equilibrium() {
        let cfg = noise_free_cfg();
        let (truth, _, _) = simulate(&cfg).unwrap();
        let first = truth.abundance.rows().first().unwrap();
        let last = truth.abundance.rows().last().unwrap();
        for (a, b) in first.values().iter().zip(last.values()) {
            assert!(
                (a - b).abs() < 1e-6 * a.max(1.0),
                "drifted from equilibrium: {a} vs {b}"
            );
        }
    }

    #[test]
    fn environment_correlates_with_recruitment_deviation() {
        // With positive loadings the env path must show up in the
        // recruitment residuals around the Beverton-Holt mean.
        let cfg = SimConfig {
            years: 200,
            sigma_proc: 0.05,
            environment: Environment::Ar1 {
                phi: 0.7,
                sigma: 0.4,
                loading_recruitment: 0.8,
                loading_survey: 0.5,
                loading_mortality: 0.0,
            },
            ..SimConfig::default()
        };
        let (truth, _, _) = simulate(&cfg).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for t in 0..cfg.years - 1 {
            let expected = beverton_holt(truth.ssb.values()[t], cfg.bh_alpha, cfg.bh_beta).unwrap();
            let actual = truth.recruitment.values()[t + 1];
            xs.push(truth.environment[t]);
            ys.push((actual / expected).ln());
        }
        let corr = correlation(&xs, &ys);
        assert!(corr > 0.5, "correlation {corr} too weak");
    }

    #[test]
    fn white_noise_environment_has_no_lag_one_memory() {
        let cfg = SimConfig {
            years: 400,
            environment: Environment::Ar1 {
                phi: 0.0,
                sigma: 0.5,
                loading_recruitment: 0.0,
                loading_survey: 0.0,
                loading_mortality: 0.0,
            },
            ..SimConfig::default()
        };
        let (truth, _, _) = simulate(&cfg).unwrap();
        let e = &truth.environment;
        let corr = correlation(&e[..e.len() - 1], &e[1..]);
        assert!(
            corr.abs() < 3.0 / (cfg.years as f64).sqrt(),
            "lag-1 corr {corr}"
        );
    }

    #[test]
    fn simulated_abundance_stays_strictly_positive() {
        let cfg = SimConfig {
            years: 120,
            sigma_proc: 0.3,
            environment: Environment::Ar1 {
                phi: 0.9,
                sigma: 0.5,
                loading_recruitment: 1.0,
                loading_survey: 0.5,
                loading_mortality: 0.5,
            },
            ..SimConfig::default()
        };
        let (truth, _, _) = simulate(&cfg).unwrap();
        for row in truth.abundance.rows() {
            assert!(row.values().iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn conservation_with_plus_group_and_no_noise() {
        let cfg = noise_free_cfg();
        let (truth, _, _) = simulate(&cfg).unwrap();
        let m = cfg.natural_mortality;
        for t in 0..cfg.years - 1 {
            let n_t = truth.abundance.rows()[t].values();
            let n_next = truth.abundance.rows()[t + 1].values();
            let fishing = &truth.fishing_mortality[t];
            let deaths: f64 = n_t
                .iter()
                .zip(fishing)
                .map(|(n, f)| n * (1.0 - (-(f + m)).exp()))
                .sum();
            let recruits = n_next[0];
            let balance: f64 = n_t.iter().sum::<f64>() - n_next.iter().sum::<f64>() + recruits;
            assert!(
                (balance - deaths).abs() < 1e-6 * deaths.max(1.0),
                "year {t}: balance {balance} vs deaths {deaths}"
            );
        }
    }

    #[test]
    fn catch_fleet_is_consistent_with_baranov() {
        let mut cfg = SimConfig {
            sigma_proc: 0.0,
            ..SimConfig::default()
        };
        cfg.fleets[0].sigma_obs = 0.0;
        let (truth, obs, _) = simulate(&cfg).unwrap();
        let catch_fleet = obs.fleet("catch").unwrap();
        let m_row = vec![cfg.natural_mortality; 6];
        let year = cfg.first_year + 3;
        let n_row = truth.abundance.row(year).unwrap();
        let expected =
            baranov_catch(n_row.values(), truth.fishing_at(year).unwrap(), &m_row).unwrap();
        for age in cfg.ages.ages() {
            let idx = cfg.ages.index_of(age).unwrap();
            let got = catch_fleet.value(year, age).unwrap();
            assert!((got / expected[idx]).ln().abs() < 1e-12);
        }
    }

    fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
        cov / (vx * vy).sqrt()
    }
}

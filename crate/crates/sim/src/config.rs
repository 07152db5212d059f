use serde::{Deserialize, Serialize};
use stockcast_core::{AgeRange, FleetKind};

use crate::SimError;

/// Exogenous fishing intensity over the simulated years. Age-specific
/// mortality is `F_{a,t} = selectivity_a * f_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FishingPath {
    Constant { f: f64 },
    RandomWalk { f_init: f64, sigma_f: f64 },
    Path { values: Vec<f64> },
}

impl FishingPath {
    pub fn initial_f(&self) -> f64 {
        match self {
            FishingPath::Constant { f } => *f,
            FishingPath::RandomWalk { f_init, .. } => *f_init,
            FishingPath::Path { values } => values.first().copied().unwrap_or(0.0),
        }
    }
}

/// Latent environmental driver. `Ar1` loads onto recruitment
/// (`loading_recruitment`, multiplier `exp(loading * e_t)`), onto the
/// catchability of the first survey fleet (`loading_survey`), and
/// optionally onto natural mortality (`loading_mortality`, multiplier
/// `exp(loading * e_t)` on M). All of it is invisible to the assessment
/// model, which assumes constant mortality and stationary catchability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Environment {
    None,
    Ar1 {
        phi: f64,
        sigma: f64,
        loading_recruitment: f64,
        loading_survey: f64,
        #[serde(default)]
        loading_mortality: f64,
    },
}

/// Sparse per-age survey catchability: `(age, q)` pairs; ages absent from
/// the list are not observed by the fleet.
pub type SurveyCatchability = Vec<(u32, f64)>;

/// One simulated data source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetSimConfig {
    pub name: String,
    pub kind: FleetKind,
    pub sigma_obs: f64,
    /// Required for surveys, aligned with the stock age range; ignored for
    /// commercial catch fleets (catch observes every age via Baranov).
    #[serde(default)]
    pub catchability: SurveyCatchability,
}

impl FleetSimConfig {
    pub fn commercial(name: impl Into<String>, sigma_obs: f64) -> Self {
        Self {
            name: name.into(),
            kind: FleetKind::CommercialCatch,
            sigma_obs,
            catchability: vec![],
        }
    }

    pub fn survey(
        name: impl Into<String>,
        timing: f64,
        sigma_obs: f64,
        catchability: SurveyCatchability,
    ) -> Self {
        Self {
            name: name.into(),
            kind: FleetKind::Survey { timing },
            sigma_obs,
            catchability,
        }
    }
}

/// Full specification of a synthetic stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub ages: AgeRange,
    /// Number of simulated years T.
    pub years: usize,
    pub first_year: i32,
    /// Beverton-Holt: recruits (thousands) per tonne of SSB at low SSB.
    pub bh_alpha: f64,
    /// Beverton-Holt density dependence, 1/tonnes.
    pub bh_beta: f64,
    pub natural_mortality: f64,
    /// Per-age relative vulnerability to the fishery, in [0, 1].
    pub selectivity: Vec<f64>,
    pub weight_at_age: Vec<f64>,
    pub maturity_at_age: Vec<f64>,
    pub fishing: FishingPath,
    /// Log-scale process noise on survival and recruitment transitions.
    pub sigma_proc: f64,
    pub fleets: Vec<FleetSimConfig>,
    pub environment: Environment,
    pub seed: u64,
}

/// Logistic selectivity curve evaluated over an age range.
pub fn logistic_selectivity(ages: AgeRange, a50: f64, slope: f64) -> Vec<f64> {
    ages.ages()
        .map(|a| 1.0 / (1.0 + (-slope * (a as f64 - a50)).exp()))
        .collect()
}

impl Default for SimConfig {
    /// A mid-sized demersal-like stock: six age classes with a plus group,
    /// forty years, one commercial fleet and two surveys.
    fn default() -> Self {
        let ages = AgeRange::new(1, 6, true).expect("valid range");
        SimConfig {
            ages,
            years: 40,
            first_year: 1,
            bh_alpha: 5.0,
            bh_beta: 0.002,
            natural_mortality: 0.2,
            selectivity: logistic_selectivity(ages, 2.5, 2.0),
            weight_at_age: vec![0.1, 0.4, 0.8, 1.2, 1.6, 2.0],
            maturity_at_age: vec![0.0, 0.3, 0.8, 1.0, 1.0, 1.0],
            fishing: FishingPath::RandomWalk {
                f_init: 0.3,
                sigma_f: 0.08,
            },
            sigma_proc: 0.08,
            fleets: vec![
                FleetSimConfig::commercial("catch", 0.1),
                FleetSimConfig::survey(
                    "survey_q1",
                    0.1,
                    0.25,
                    vec![(1, 0.4), (2, 0.6), (3, 0.7), (4, 0.7), (5, 0.7)],
                ),
                FleetSimConfig::survey(
                    "survey_4q",
                    0.75,
                    0.3,
                    vec![(1, 0.3), (2, 0.5), (3, 0.6), (4, 0.6)],
                ),
            ],
            environment: Environment::None,
            seed: 42,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let n_ages = self.ages.len();
        if self.years < 10 {
            return Err(SimError::InvalidConfig(
                "need at least 10 simulated years".into(),
            ));
        }
        if !(self.bh_alpha > 0.0 && self.bh_beta > 0.0) {
            return Err(SimError::InvalidConfig(
                "Beverton-Holt parameters must be positive".into(),
            ));
        }
        if self.natural_mortality < 0.0 {
            return Err(SimError::InvalidConfig(
                "natural mortality must be non-negative".into(),
            ));
        }
        if self.sigma_proc < 0.0 {
            return Err(SimError::InvalidConfig(
                "sigma_proc must be non-negative".into(),
            ));
        }
        for (label, v, expect_len) in [
            ("selectivity", &self.selectivity, n_ages),
            ("weight_at_age", &self.weight_at_age, n_ages),
            ("maturity_at_age", &self.maturity_at_age, n_ages),
        ] {
            if v.len() != expect_len {
                return Err(SimError::InvalidConfig(format!(
                    "{label} must have one entry per age class ({expect_len})"
                )));
            }
        }
        if self.selectivity.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(SimError::InvalidConfig(
                "selectivity must lie in [0, 1]".into(),
            ));
        }
        match &self.fishing {
            FishingPath::Constant { f } if *f < 0.0 => {
                return Err(SimError::InvalidConfig(
                    "fishing intensity must be non-negative".into(),
                ))
            }
            FishingPath::RandomWalk { f_init, sigma_f } if *f_init <= 0.0 || *sigma_f < 0.0 => {
                return Err(SimError::InvalidConfig(
                    "random-walk fishing needs positive f_init and non-negative sigma_f".into(),
                ))
            }
            FishingPath::Path { values }
                if (values.len() != self.years || values.iter().any(|f| *f < 0.0)) =>
            {
                return Err(SimError::InvalidConfig(
                    "explicit fishing path must cover every year with non-negative values".into(),
                ));
            }
            _ => {}
        }
        if let Environment::Ar1 { phi, sigma, .. } = self.environment {
            if !(-1.0 < phi && phi < 1.0) {
                return Err(SimError::InvalidConfig(
                    "AR(1) phi must lie in (-1, 1)".into(),
                ));
            }
            if sigma < 0.0 {
                return Err(SimError::InvalidConfig(
                    "AR(1) sigma must be non-negative".into(),
                ));
            }
        }
        let mut has_catch = false;
        let mut has_survey = false;
        for fleet in &self.fleets {
            if fleet.sigma_obs < 0.0 {
                return Err(SimError::InvalidConfig(format!(
                    "fleet {} sigma_obs must be non-negative",
                    fleet.name
                )));
            }
            match fleet.kind {
                FleetKind::CommercialCatch => has_catch = true,
                FleetKind::Survey { timing } => {
                    has_survey = true;
                    if !(0.0..=1.0).contains(&timing) {
                        return Err(SimError::InvalidConfig(format!(
                            "fleet {} timing must lie in [0, 1]",
                            fleet.name
                        )));
                    }
                    if fleet.catchability.is_empty() {
                        return Err(SimError::InvalidConfig(format!(
                            "fleet {} observes no ages",
                            fleet.name
                        )));
                    }
                    for (age, q) in &fleet.catchability {
                        if self.ages.index_of(*age).is_none() {
                            return Err(SimError::InvalidConfig(format!(
                                "fleet {} catchability names age {age} outside the age range",
                                fleet.name
                            )));
                        }
                        if *q <= 0.0 {
                            return Err(SimError::InvalidConfig(format!(
                                "fleet {} catchability must be positive, got {q} at age {age}",
                                fleet.name
                            )));
                        }
                    }
                    let mut seen: Vec<u32> = fleet.catchability.iter().map(|(a, _)| *a).collect();
                    seen.sort_unstable();
                    seen.dedup();
                    if seen.len() != fleet.catchability.len() {
                        return Err(SimError::InvalidConfig(format!(
                            "fleet {} lists a duplicate catchability age",
                            fleet.name
                        )));
                    }
                }
            }
        }
        if !has_catch || !has_survey {
            return Err(SimError::InvalidConfig(
                "need at least one commercial catch fleet and one survey fleet".into(),
            ));
        }
        Ok(())
    }

    pub fn last_year(&self) -> i32 {
        self.first_year + self.years as i32 - 1
    }
}

//! Estimated parameter vector: natural-scale struct, packed transformed
//! vector for the optimizer, and the survey catchability block layout.

use serde::{Deserialize, Serialize};
use stockcast_core::ObservationSeries;

use crate::config::{AssessorConfig, RecruitmentModel};
use crate::AssessError;

/// Recruitment parameters on the natural scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum RecruitmentParams {
    BevertonHolt { alpha: f64, beta: f64 },
    RandomWalk,
}

/// Full parameter set on the natural scale. Fleet-indexed vectors follow
/// the fleet order of the `ObservationSeries` the layout was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub sigma_proc: f64,
    pub sigma_f: f64,
    /// One observation standard deviation per fleet.
    pub sigma_obs: Vec<f64>,
    /// Catchability per survey fleet and age block (natural scale).
    pub catchability: Vec<Vec<f64>>,
    pub sel_a50: f64,
    pub sel_slope: f64,
    pub recruitment: RecruitmentParams,
}

/// Survey catchability age blocks: `{min_age}`, `{min_age+1}`, `{rest}`,
/// intersected with the ages the fleet actually observes.
#[derive(Debug, Clone, PartialEq)]
pub struct QBlocks {
    /// For each survey fleet: per observed age (by stock age-range index),
    /// the block index into that fleet's q vector.
    pub block_of_age: Vec<Vec<Option<usize>>>,
    /// Number of q blocks per survey fleet.
    pub n_blocks: Vec<usize>,
    /// Map from fleet index in the observation series to survey index.
    pub survey_of_fleet: Vec<Option<usize>>,
}

impl QBlocks {
    pub fn from_observations(obs: &ObservationSeries) -> Self {
        let mut block_of_age = Vec::new();
        let mut n_blocks = Vec::new();
        let mut survey_of_fleet = Vec::new();
        for fleet in obs.fleets() {
            if !fleet.kind().is_survey() {
                survey_of_fleet.push(None);
                continue;
            }
            survey_of_fleet.push(Some(block_of_age.len()));
            let ages = fleet.ages();
            let coverage = fleet.coverage();
            let mut mapping = vec![None; ages.len()];
            let mut used = Vec::new();
            for age in coverage {
                let raw_block = if age == ages.min_age() {
                    0usize
                } else if age == ages.min_age() + 1 {
                    1
                } else {
                    2
                };
                let block = match used.iter().position(|b| *b == raw_block) {
                    Some(i) => i,
                    None => {
                        used.push(raw_block);
                        used.len() - 1
                    }
                };
                mapping[ages.index_of(age).expect("covered age in range")] = Some(block);
            }
            block_of_age.push(mapping);
            n_blocks.push(used.len());
        }
        Self {
            block_of_age,
            n_blocks,
            survey_of_fleet,
        }
    }
}

/// Packing layout between `Params` and the transformed optimizer vector.
/// All entries are log-transformed except `sel_a50`, which is raw with
/// finite bounds.
#[derive(Debug, Clone)]
pub struct ParamLayout {
    pub n_fleets: usize,
    pub q_blocks: QBlocks,
    pub recruitment: RecruitmentModel,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    age_bounds: (f64, f64),
}

fn log_bounds(lo: f64, hi: f64) -> (f64, f64) {
    (lo.ln(), hi.ln())
}

impl ParamLayout {
    pub fn new(obs: &ObservationSeries, cfg: &AssessorConfig) -> Result<Self, AssessError> {
        let q_blocks = QBlocks::from_observations(obs);
        let n_fleets = obs.fleets().len();
        let n_surveys = q_blocks.n_blocks.len();
        if n_surveys == 0 {
            return Err(AssessError::InvalidInput(
                "need at least one survey fleet".into(),
            ));
        }
        let age_lo = cfg.ages.min_age() as f64 - 2.0;
        let age_hi = cfg.ages.max_age() as f64 + 2.0;
        let sigma_bounds = log_bounds(1e-4, 5.0);
        let q_bounds = log_bounds(1e-6, 1e3);
        let slope_bounds = log_bounds(0.05, 20.0);
        let alpha_bounds = log_bounds(1e-3, 1e6);
        let beta_bounds = log_bounds(1e-9, 10.0);

        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let push = |b: (f64, f64), lower: &mut Vec<f64>, upper: &mut Vec<f64>| {
            lower.push(b.0);
            upper.push(b.1);
        };
        push(sigma_bounds, &mut lower, &mut upper); // sigma_proc
        push(sigma_bounds, &mut lower, &mut upper); // sigma_f
        for _ in 0..n_fleets {
            push(sigma_bounds, &mut lower, &mut upper);
        }
        for blocks in &q_blocks.n_blocks {
            for _ in 0..*blocks {
                push(q_bounds, &mut lower, &mut upper);
            }
        }
        push((age_lo, age_hi), &mut lower, &mut upper); // a50
        push(slope_bounds, &mut lower, &mut upper); // slope
        if matches!(cfg.recruitment, RecruitmentModel::BevertonHolt { .. }) {
            push(alpha_bounds, &mut lower, &mut upper);
            push(beta_bounds, &mut lower, &mut upper);
        }

        Ok(Self {
            n_fleets,
            q_blocks,
            recruitment: cfg.recruitment,
            lower,
            upper,
            age_bounds: (age_lo, age_hi),
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Starting parameters from the config's configured values.
    pub fn start_params(&self, cfg: &AssessorConfig) -> Params {
        Params {
            sigma_proc: cfg.sigma_proc_start,
            sigma_f: cfg.sigma_f_start,
            sigma_obs: vec![cfg.sigma_obs_start; self.n_fleets],
            catchability: self
                .q_blocks
                .n_blocks
                .iter()
                .map(|n| vec![cfg.catchability_start; *n])
                .collect(),
            sel_a50: cfg.selectivity_start.a50,
            sel_slope: cfg.selectivity_start.slope,
            recruitment: match cfg.recruitment {
                RecruitmentModel::BevertonHolt {
                    alpha_start,
                    beta_start,
                } => RecruitmentParams::BevertonHolt {
                    alpha: alpha_start,
                    beta: beta_start,
                },
                RecruitmentModel::RandomWalk => RecruitmentParams::RandomWalk,
            },
        }
    }

    /// Pack natural-scale parameters into the transformed vector.
    pub fn pack(&self, p: &Params) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.push(p.sigma_proc.ln());
        v.push(p.sigma_f.ln());
        for s in &p.sigma_obs {
            v.push(s.ln());
        }
        for fleet_q in &p.catchability {
            for q in fleet_q {
                v.push(q.ln());
            }
        }
        v.push(p.sel_a50);
        v.push(p.sel_slope.ln());
        if let RecruitmentParams::BevertonHolt { alpha, beta } = p.recruitment {
            v.push(alpha.ln());
            v.push(beta.ln());
        }
        debug_assert_eq!(v.len(), self.dim());
        v
    }

    /// Unpack the transformed vector into natural-scale parameters.
    pub fn unpack(&self, v: &[f64]) -> Params {
        let mut at = 0usize;
        let mut next = || {
            let x = v[at];
            at += 1;
            x
        };
        let sigma_proc = next().exp();
        let sigma_f = next().exp();
        let sigma_obs: Vec<f64> = (0..self.n_fleets).map(|_| next().exp()).collect();
        let catchability: Vec<Vec<f64>> = self
            .q_blocks
            .n_blocks
            .iter()
            .map(|n| (0..*n).map(|_| next().exp()).collect())
            .collect();
        let sel_a50 = next().clamp(self.age_bounds.0, self.age_bounds.1);
        let sel_slope = next().exp();
        let recruitment = match self.recruitment {
            RecruitmentModel::BevertonHolt { .. } => RecruitmentParams::BevertonHolt {
                alpha: next().exp(),
                beta: next().exp(),
            },
            RecruitmentModel::RandomWalk => RecruitmentParams::RandomWalk,
        };
        Params {
            sigma_proc,
            sigma_f,
            sigma_obs,
            catchability,
            sel_a50,
            sel_slope,
            recruitment,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use stockcast_core::{AgeRange, FleetKind, FleetObservation, ObservationSeries};

    fn obs_two_fleets() -> ObservationSeries {
        let ages = AgeRange::new(1, 5, true).unwrap();
        let catch_rows = vec![vec![Some(1.0); 5]; 12];
        let survey_rows: Vec<Vec<Option<f64>>> = (0..12)
            .map(|_| vec![Some(1.0), Some(1.0), Some(1.0), Some(1.0), None])
            .collect();
        ObservationSeries::new(vec![
            FleetObservation::new("catch", FleetKind::CommercialCatch, ages, 2000, catch_rows)
                .unwrap(),
            FleetObservation::new(
                "survey",
                FleetKind::Survey { timing: 0.2 },
                ages,
                2000,
                survey_rows,
            )
            .unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn q_blocks_cover_min_min1_rest() {
        let obs = obs_two_fleets();
        let blocks = QBlocks::from_observations(&obs);
        assert_eq!(blocks.n_blocks, vec![3]);
        // Ages 1, 2 get their own blocks; 3 and 4 share; 5 unobserved.
        assert_eq!(
            blocks.block_of_age[0],
            vec![Some(0), Some(1), Some(2), Some(2), None]
        );
        assert_eq!(blocks.survey_of_fleet, vec![None, Some(0)]);
    }

    #[test]
    fn pack_unpack_round_trips() {
        let obs = obs_two_fleets();
        let cfg = AssessorConfig::new(AgeRange::new(1, 5, true).unwrap());
        let layout = ParamLayout::new(&obs, &cfg).unwrap();
        let p = layout.start_params(&cfg);
        let packed = layout.pack(&p);
        assert_eq!(packed.len(), layout.dim());
        let q = layout.unpack(&packed);
        assert!((q.sigma_proc - p.sigma_proc).abs() < 1e-12);
        assert!((q.sel_a50 - p.sel_a50).abs() < 1e-12);
        assert_eq!(q.catchability[0].len(), 3);
    }

    #[test]
    fn bounds_are_finite_and_ordered() {
        let obs = obs_two_fleets();
        let cfg = AssessorConfig::new(AgeRange::new(1, 5, true).unwrap());
        let layout = ParamLayout::new(&obs, &cfg).unwrap();
        for (lo, hi) in layout.lower.iter().zip(&layout.upper) {
            assert!(lo.is_finite() && hi.is_finite() && lo < hi);
        }
    }
}

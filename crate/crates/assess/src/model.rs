//! The process and observation maps of the assessment state-space model,
//! with first-order (Jacobian) linearizations for the extended Kalman
//! filter.
//!
//! Latent state: `x = (log n_{min}..log n_{max}, log f)`. Fishing
//! mortality is separable, `F_{a,t} = S_a * f_t`, with logistic
//! selectivity `S_a` and `f_t` a log-scale random walk. Survival and
//! recruitment transitions act in log space; commercial catches follow
//! the log-Baranov map and surveys a log-linear catchability map.

use nalgebra::{DMatrix, DVector};
use stockcast_core::{BiologySeries, FleetKind, ObservationSeries};

use crate::config::AssessorConfig;
use crate::params::{Params, QBlocks, RecruitmentParams};

/// Variance floor applied to every noise parameter inside the filter.
pub(crate) const VAR_FLOOR: f64 = 1e-6;
const SSB_FLOOR: f64 = 1e-9;
const EQUILIBRIUM_ITERS: usize = 2_000;

pub(crate) struct Model<'a> {
    pub params: &'a Params,
    pub cfg: &'a AssessorConfig,
    pub bio: &'a BiologySeries,
    pub q_blocks: &'a QBlocks,
    /// Logistic selectivity per age for the current parameters.
    pub selectivity: Vec<f64>,
}

impl<'a> Model<'a> {
    pub fn new(
        params: &'a Params,
        cfg: &'a AssessorConfig,
        bio: &'a BiologySeries,
        q_blocks: &'a QBlocks,
    ) -> Self {
        let selectivity = cfg
            .ages
            .ages()
            .map(|a| 1.0 / (1.0 + (-params.sel_slope * (a as f64 - params.sel_a50)).exp()))
            .collect();
        Self {
            params,
            cfg,
            bio,
            q_blocks,
            selectivity,
        }
    }

    pub fn n_ages(&self) -> usize {
        self.cfg.ages.len()
    }

    pub fn state_dim(&self) -> usize {
        self.n_ages() + 1
    }

    /// Diagonal of the process noise covariance.
    pub fn process_noise_diag(&self) -> DVector<f64> {
        let n = self.n_ages();
        let mut q = DVector::zeros(n + 1);
        let proc_var = (self.params.sigma_proc * self.params.sigma_proc).max(VAR_FLOOR);
        for i in 0..n {
            q[i] = proc_var;
        }
        q[n] = (self.params.sigma_f * self.params.sigma_f).max(VAR_FLOOR);
        q
    }

    /// Process map `g` and Jacobian `G` for the transition from `year` to
    /// `year + 1`, linearized at `x`.
    pub fn process(&self, x: &DVector<f64>, year: i32) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n_ages();
        let dim = n + 1;
        let f_mult = x[n].exp();
        let m_row = self.bio.natural_mortality_row_clamped(year);
        let weight = self.bio.weight_row_clamped(year);
        let maturity = self.bio.maturity_row_clamped(year);
        let z: Vec<f64> = (0..n)
            .map(|i| self.selectivity[i] * f_mult + m_row[i])
            .collect();
        let fishing: Vec<f64> = (0..n).map(|i| self.selectivity[i] * f_mult).collect();

        let mut g = DVector::zeros(dim);
        let mut jac = DMatrix::zeros(dim, dim);

        // Survival rows: log n_{a+1,t+1} = log n_{a,t} - Z_a.
        for target in 1..n {
            g[target] = x[target - 1] - z[target - 1];
            jac[(target, target - 1)] = 1.0;
            jac[(target, n)] = -fishing[target - 1];
        }
        if self.cfg.ages.plus_group() {
            // Plus group accumulates the two oldest classes.
            let u = (x[n - 2] - z[n - 2]).exp();
            let v = (x[n - 1] - z[n - 1]).exp();
            let total = u + v;
            g[n - 1] = total.ln();
            let (wu, wv) = (u / total, v / total);
            jac[(n - 1, n - 2)] = wu;
            jac[(n - 1, n - 1)] = wv;
            jac[(n - 1, n)] = -(wu * fishing[n - 2] + wv * fishing[n - 1]);
        }

        // Recruitment row.
        match self.params.recruitment {
            RecruitmentParams::BevertonHolt { alpha, beta } => {
                let ssb: f64 = (0..n)
                    .map(|i| weight[i] * maturity[i] * x[i].exp())
                    .sum::<f64>()
                    .max(SSB_FLOOR);
                g[0] = alpha.ln() + ssb.ln() - (1.0 + beta * ssb).ln();
                let dlog = 1.0 / (ssb * (1.0 + beta * ssb));
                for i in 0..n {
                    jac[(0, i)] = dlog * weight[i] * maturity[i] * x[i].exp();
                }
            }
            RecruitmentParams::RandomWalk => {
                g[0] = x[0];
                jac[(0, 0)] = 1.0;
            }
        }

        // Fishing intensity random walk.
        g[n] = x[n];
        jac[(n, n)] = 1.0;

        (g, jac)
    }

    /// Predicted log-observations for `year`: value vector `h`, Jacobian
    /// `H`, observation variance diagonal, and the observed log-values, in
    /// fleet order then age order. `None` when no cell is observed.
    #[allow(clippy::type_complexity)]
    pub fn observation(
        &self,
        x: &DVector<f64>,
        year: i32,
        obs: &ObservationSeries,
    ) -> Option<(DVector<f64>, DMatrix<f64>, DVector<f64>, DVector<f64>)> {
        let n = self.n_ages();
        let f_mult = x[n].exp();
        let m_row = self.bio.natural_mortality_row_clamped(year);

        let mut h = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut r_diag = Vec::new();
        let mut y_log = Vec::new();

        for (fleet_idx, fleet) in obs.fleets().iter().enumerate() {
            let Some(row) = fleet.row(year) else { continue };
            let sigma = self.params.sigma_obs[fleet_idx];
            let var = (sigma * sigma).max(VAR_FLOOR);
            for (age_idx, cell) in row.iter().enumerate() {
                let Some(value) = cell else { continue };
                let fishing = self.selectivity[age_idx] * f_mult;
                let z = fishing + m_row[age_idx];
                let mut grad = vec![0.0; n + 1];
                let predicted = match fleet.kind() {
                    FleetKind::CommercialCatch => {
                        // log C = log n + log F - log Z + log(1 - e^-Z)
                        let one_minus = 1.0 - (-z).exp();
                        grad[age_idx] = 1.0;
                        grad[n] = 1.0 - fishing / z + fishing * (-z).exp() / one_minus;
                        x[age_idx] + fishing.ln() - z.ln() + one_minus.ln()
                    }
                    FleetKind::Survey { timing } => {
                        let survey = self.q_blocks.survey_of_fleet[fleet_idx]
                            .expect("survey fleet has q blocks");
                        let block = self.q_blocks.block_of_age[survey][age_idx]
                            .expect("observed age has a q block");
                        let q = self.params.catchability[survey][block];
                        grad[age_idx] = 1.0;
                        grad[n] = -timing * fishing;
                        q.ln() + x[age_idx] - timing * z
                    }
                };
                h.push(predicted);
                rows.push(grad);
                r_diag.push(var);
                y_log.push(value.ln());
            }
        }

        if h.is_empty() {
            return None;
        }
        let m = h.len();
        let mut jac = DMatrix::zeros(m, n + 1);
        for (i, grad) in rows.iter().enumerate() {
            for (j, g) in grad.iter().enumerate() {
                jac[(i, j)] = *g;
            }
        }
        Some((
            DVector::from_vec(h),
            jac,
            DVector::from_vec(r_diag),
            DVector::from_vec(y_log),
        ))
    }

    /// Equilibrium abundance of the noise-free model at the configured
    /// initial fishing intensity; anchors the initial state prior.
    pub fn equilibrium_log_state(&self) -> DVector<f64> {
        let n = self.n_ages();
        let f_init = self.cfg.initial_f;
        let fishing: Vec<f64> = (0..n).map(|i| self.selectivity[i] * f_init).collect();
        let m_row = self
            .bio
            .natural_mortality_row_clamped(self.bio.first_year());
        let weight = self.bio.weight_row_clamped(self.bio.first_year());
        let maturity = self.bio.maturity_row_clamped(self.bio.first_year());
        let z: Vec<f64> = (0..n).map(|i| fishing[i] + m_row[i]).collect();

        let mut abundance = vec![self.cfg.prior_recruitment; n];
        match self.params.recruitment {
            RecruitmentParams::BevertonHolt { alpha, beta } => {
                for _ in 0..EQUILIBRIUM_ITERS {
                    let mut next = vec![0.0; n];
                    for target in 1..n {
                        next[target] = abundance[target - 1] * (-z[target - 1]).exp();
                    }
                    if self.cfg.ages.plus_group() {
                        next[n - 1] += abundance[n - 1] * (-z[n - 1]).exp();
                    }
                    let ssb: f64 = (0..n)
                        .map(|i| weight[i] * maturity[i] * abundance[i])
                        .sum::<f64>()
                        .max(SSB_FLOOR);
                    next[0] = alpha * ssb / (1.0 + beta * ssb);
                    let delta = abundance
                        .iter()
                        .zip(&next)
                        .map(|(a, b)| (a.max(1e-300).ln() - b.max(1e-300).ln()).abs())
                        .fold(0.0f64, f64::max);
                    abundance = next;
                    if delta < 1e-10 {
                        break;
                    }
                }
            }
            RecruitmentParams::RandomWalk => {
                for target in 1..n {
                    abundance[target] = abundance[target - 1] * (-z[target - 1]).exp();
                }
                if self.cfg.ages.plus_group() {
                    let decay = (-z[n - 1]).exp();
                    abundance[n - 1] /= 1.0 - decay.min(1.0 - 1e-9);
                }
            }
        }

        let mut x0 = DVector::zeros(n + 1);
        for i in 0..n {
            x0[i] = abundance[i].max(1e-8).ln();
        }
        x0[n] = f_init.max(1e-8).ln();
        x0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RecruitmentModel;
    use crate::params::ParamLayout;
    use stockcast_core::{AgeRange, FleetObservation};

    fn setup() -> (AssessorConfig, BiologySeries, ObservationSeries) {
        let ages = AgeRange::new(1, 4, true).unwrap();
        let cfg = AssessorConfig::new(ages);
        let bio = BiologySeries::constant(
            ages,
            2000,
            15,
            vec![0.2, 0.6, 1.0, 1.5],
            vec![0.0, 0.5, 1.0, 1.0],
            vec![0.2; 4],
        )
        .unwrap();
        let obs = ObservationSeries::new(vec![
            FleetObservation::new(
                "catch",
                FleetKind::CommercialCatch,
                ages,
                2000,
                vec![vec![Some(10.0); 4]; 15],
            )
            .unwrap(),
            FleetObservation::new(
                "survey",
                FleetKind::Survey { timing: 0.3 },
                ages,
                2000,
                vec![vec![Some(5.0), Some(4.0), Some(3.0), None]; 15],
            )
            .unwrap(),
        ])
        .unwrap();
        (cfg, bio, obs)
    }

    /// Finite-difference check of both Jacobians.
    #[test]
    fn jacobians_match_finite_differences() {
        let (cfg, bio, obs) = setup();
        let layout = ParamLayout::new(&obs, &cfg).unwrap();
        let params = layout.start_params(&cfg);
        let model = Model::new(&params, &cfg, &bio, &layout.q_blocks);

        let x = DVector::from_vec(vec![6.0, 5.5, 5.0, 4.5, -1.2]);
        let eps = 1e-6;

        let (g0, jac) = model.process(&x, 2005);
        for j in 0..x.len() {
            let mut xp = x.clone();
            xp[j] += eps;
            let (gp, _) = model.process(&xp, 2005);
            for i in 0..x.len() {
                let fd = (gp[i] - g0[i]) / eps;
                assert!(
                    (fd - jac[(i, j)]).abs() < 1e-5,
                    "process jac ({i},{j}): fd {fd} vs analytic {}",
                    jac[(i, j)]
                );
            }
        }

        let (h0, hjac, _, _) = model.observation(&x, 2005, &obs).unwrap();
        for j in 0..x.len() {
            let mut xp = x.clone();
            xp[j] += eps;
            let (hp, _, _, _) = model.observation(&xp, 2005, &obs).unwrap();
            for i in 0..h0.len() {
                let fd = (hp[i] - h0[i]) / eps;
                assert!(
                    (fd - hjac[(i, j)]).abs() < 1e-5,
                    "obs jac ({i},{j}): fd {fd} vs analytic {}",
                    hjac[(i, j)]
                );
            }
        }
    }

    #[test]
    fn equilibrium_is_a_fixed_point_of_the_process_mean() {
        let (cfg, bio, obs) = setup();
        let layout = ParamLayout::new(&obs, &cfg).unwrap();
        let params = layout.start_params(&cfg);
        let model = Model::new(&params, &cfg, &bio, &layout.q_blocks);
        let x0 = model.equilibrium_log_state();
        let (g, _) = model.process(&x0, 2000);
        for i in 0..model.n_ages() {
            assert!(
                (g[i] - x0[i]).abs() < 1e-6,
                "component {i}: {} vs {}",
                g[i],
                x0[i]
            );
        }
    }

    #[test]
    fn random_walk_recruitment_keeps_level() {
        let (mut cfg, bio, obs) = setup();
        cfg.recruitment = RecruitmentModel::RandomWalk;
        let layout = ParamLayout::new(&obs, &cfg).unwrap();
        let params = layout.start_params(&cfg);
        let model = Model::new(&params, &cfg, &bio, &layout.q_blocks);
        let x = DVector::from_vec(vec![6.0, 5.5, 5.0, 4.5, -1.2]);
        let (g, _) = model.process(&x, 2001);
        assert_eq!(g[0], x[0]);
    }
}

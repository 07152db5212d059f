//! Extended Kalman filter with prediction-error likelihood, and the RTS
//! backward smoothing pass.

use nalgebra::{DMatrix, DVector};
use stockcast_core::ObservationSeries;

use crate::model::Model;

const LN_2PI: f64 = 1.8378770664093453;

pub(crate) struct FilterOutput {
    pub nll: f64,
    /// One entry per data year, in order.
    pub predicted: Vec<(DVector<f64>, DMatrix<f64>)>,
    pub filtered: Vec<(DVector<f64>, DMatrix<f64>)>,
    /// Process Jacobian used to predict year t+1 from year t.
    pub jacobians: Vec<DMatrix<f64>>,
}

fn symmetrize(p: &mut DMatrix<f64>) {
    let pt = p.transpose();
    *p += pt;
    *p *= 0.5;
}

/// Forward pass. `None` signals a numerical collapse (non-finite values or
/// a non-positive-definite innovation covariance); callers treat that as
/// an infinite negative log-likelihood.
pub(crate) fn run_filter(model: &Model<'_>, obs: &ObservationSeries) -> Option<FilterOutput> {
    let dim = model.state_dim();
    let first_year = obs.first_year();
    let n_years = obs.n_years();

    let mut x_pred = model.equilibrium_log_state();
    let mut p_pred = DMatrix::identity(dim, dim);
    let q = DMatrix::from_diagonal(&model.process_noise_diag());

    let mut nll = 0.0;
    let mut predicted = Vec::with_capacity(n_years);
    let mut filtered = Vec::with_capacity(n_years);
    let mut jacobians = Vec::with_capacity(n_years.saturating_sub(1));

    for offset in 0..n_years {
        let year = first_year + offset as i32;
        if x_pred.iter().any(|v| !v.is_finite()) {
            return None;
        }
        predicted.push((x_pred.clone(), p_pred.clone()));

        let (x_filt, p_filt) = match model.observation(&x_pred, year, obs) {
            None => (x_pred.clone(), p_pred.clone()),
            Some((h, h_jac, r_diag, y_log)) => {
                let m = h.len();
                let innovation = &y_log - &h;
                let mut s = &h_jac * &p_pred * h_jac.transpose();
                for i in 0..m {
                    s[(i, i)] += r_diag[i];
                }
                symmetrize(&mut s);
                let chol = s.clone().cholesky()?;
                let solved = chol.solve(&innovation);
                let quad = innovation.dot(&solved);
                let mut logdet = 0.0;
                for i in 0..m {
                    let d = chol.l()[(i, i)];
                    if d <= 0.0 || !d.is_finite() {
                        return None;
                    }
                    logdet += 2.0 * d.ln();
                }
                nll += 0.5 * (m as f64 * LN_2PI + logdet + quad);
                if !nll.is_finite() {
                    return None;
                }

                let ph_t = &p_pred * h_jac.transpose();
                let gain = chol.solve(&ph_t.transpose()).transpose();
                let x_filt = &x_pred + &gain * innovation;
                // Joseph-form covariance update.
                let identity = DMatrix::<f64>::identity(dim, dim);
                let i_kh = &identity - &gain * &h_jac;
                let mut p_filt = &i_kh * &p_pred * i_kh.transpose();
                for i in 0..dim {
                    for j in 0..dim {
                        let mut krk = 0.0;
                        for k in 0..m {
                            krk += gain[(i, k)] * r_diag[k] * gain[(j, k)];
                        }
                        p_filt[(i, j)] += krk;
                    }
                }
                symmetrize(&mut p_filt);
                (x_filt, p_filt)
            }
        };

        filtered.push((x_filt.clone(), p_filt.clone()));

        if offset + 1 < n_years {
            let (g, g_jac) = model.process(&x_filt, year);
            x_pred = g;
            p_pred = &g_jac * &p_filt * g_jac.transpose() + &q;
            symmetrize(&mut p_pred);
            jacobians.push(g_jac);
        }
    }

    Some(FilterOutput {
        nll,
        predicted,
        filtered,
        jacobians,
    })
}

/// RTS backward recursion on a completed filter pass.
#[allow(clippy::type_complexity)]
pub(crate) fn smooth(filter: &FilterOutput) -> Option<Vec<(DVector<f64>, DMatrix<f64>)>> {
    let n = filter.filtered.len();
    let mut smoothed = filter.filtered.clone();
    for t in (0..n.saturating_sub(1)).rev() {
        let (x_filt, p_filt) = &filter.filtered[t];
        let (x_pred_next, p_pred_next) = &filter.predicted[t + 1];
        let g_jac = &filter.jacobians[t];

        let chol = p_pred_next.clone().cholesky()?;
        let pf_gt = p_filt * g_jac.transpose();
        let smoother_gain = chol.solve(&pf_gt.transpose()).transpose();

        let dx = &smoothed[t + 1].0 - x_pred_next;
        let dp = &smoothed[t + 1].1 - p_pred_next;
        let x = x_filt + &smoother_gain * dx;
        let mut p = p_filt + &(&smoother_gain * dp * smoother_gain.transpose());
        symmetrize(&mut p);
        smoothed[t] = (x, p);
    }
    Some(smoothed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::AssessorConfig;
    use crate::params::ParamLayout;
    use stockcast_core::{AgeRange, BiologySeries, FleetKind, FleetObservation};

    #[test]
    fn observation_updates_never_increase_covariance_trace() {
        let ages = AgeRange::new(1, 4, true).unwrap();
        let cfg = AssessorConfig::new(ages);
        let bio = BiologySeries::constant(
            ages,
            1,
            12,
            vec![0.3, 0.7, 1.1, 1.5],
            vec![0.1, 0.6, 1.0, 1.0],
            vec![0.2; 4],
        )
        .unwrap();
        let rows: Vec<Vec<Option<f64>>> = (0..12)
            .map(|t| vec![Some(40.0 + t as f64), Some(30.0), Some(20.0), Some(8.0)])
            .collect();
        let obs = stockcast_core::ObservationSeries::new(vec![
            FleetObservation::new("catch", FleetKind::CommercialCatch, ages, 1, rows.clone())
                .unwrap(),
            FleetObservation::new("survey", FleetKind::Survey { timing: 0.4 }, ages, 1, rows)
                .unwrap(),
        ])
        .unwrap();
        let layout = ParamLayout::new(&obs, &cfg).unwrap();
        let params = layout.start_params(&cfg);
        let model = Model::new(&params, &cfg, &bio, &layout.q_blocks);
        let out = run_filter(&model, &obs).unwrap();
        for ((_, p_pred), (_, p_filt)) in out.predicted.iter().zip(&out.filtered) {
            assert!(p_filt.trace() <= p_pred.trace() + 1e-10);
        }
        // Smoothing runs to completion on the same pass.
        assert!(smooth(&out).is_some());
    }
}

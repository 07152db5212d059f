//! Retrospective refits and the Mohn's rho stability diagnostic.

use std::collections::BTreeMap;

use stockcast_core::{BiologySeries, ObservationSeries, ParameterKind, StockParameterSeries};

use crate::config::AssessorConfig;
use crate::fit::{derive_parameter, fit, fit_warm, FittedAssessment};
use crate::AssessError;

/// Recruitment and SSB estimates from every retrospective fit. Keys are
/// the last data year of each model; non-converged fits are absent.
#[derive(Debug, Clone)]
pub struct RetroMatrix {
    pub recruitment: BTreeMap<i32, StockParameterSeries>,
    pub ssb: BTreeMap<i32, StockParameterSeries>,
    /// Every attempted last data year, converged or not.
    pub attempted: Vec<i32>,
}

impl RetroMatrix {
    pub fn series(&self, kind: ParameterKind) -> &BTreeMap<i32, StockParameterSeries> {
        match kind {
            ParameterKind::Recruitment => &self.recruitment,
            ParameterKind::Ssb => &self.ssb,
        }
    }

    pub fn last_year(&self) -> Option<i32> {
        self.recruitment.keys().next_back().copied()
    }
}

fn parameter_series(
    model: &FittedAssessment,
    bio: &BiologySeries,
    kind: ParameterKind,
) -> Result<StockParameterSeries, AssessError> {
    let mut values = Vec::new();
    for year in model.first_year..=model.last_data_year {
        let n = model.estimate(year)?;
        values.push(derive_parameter(&n, bio, kind)?);
    }
    StockParameterSeries::new(kind, model.first_year, values).map_err(Into::into)
}

/// Extract both derived parameter series from one fitted model.
pub fn derived_series(
    model: &FittedAssessment,
    bio: &BiologySeries,
) -> Result<(StockParameterSeries, StockParameterSeries), AssessError> {
    Ok((
        parameter_series(model, bio, ParameterKind::Recruitment)?,
        parameter_series(model, bio, ParameterKind::Ssb)?,
    ))
}

/// Fit `M_t` for every `t` from `first_t` to the final data year and
/// collect each model's recruitment and SSB estimates.
///
/// Peels run downward: the full-data model is fitted cold (so the last
/// row is exactly what [`fit`] on the full series gives), and each
/// shorter fit warm starts from the next fuller optimum.
pub fn retrospective_matrix(
    obs: &ObservationSeries,
    bio: &BiologySeries,
    cfg: &AssessorConfig,
    first_t: i32,
) -> Result<RetroMatrix, AssessError> {
    let last = obs.last_year();
    if first_t > last {
        return Err(AssessError::InvalidInput(format!(
            "first retrospective year {first_t} is past the final data year {last}"
        )));
    }
    let mut recruitment = BTreeMap::new();
    let mut ssb = BTreeMap::new();
    let mut previous: Option<FittedAssessment> = None;
    for t in (first_t..=last).rev() {
        let truncated = obs.truncated(t)?;
        let fitted = match &previous {
            Some(prev) => fit_warm(&truncated, bio, cfg, &prev.params)?,
            None => fit(&truncated, bio, cfg)?,
        };
        if fitted.converged {
            recruitment.insert(
                t,
                parameter_series(&fitted, bio, ParameterKind::Recruitment)?,
            );
            ssb.insert(t, parameter_series(&fitted, bio, ParameterKind::Ssb)?);
            previous = Some(fitted);
        }
    }
    Ok(RetroMatrix {
        recruitment,
        ssb,
        attempted: (first_t..=last).collect(),
    })
}

/// Result of the Mohn's rho computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MohnsRho {
    pub rho: f64,
    pub peels_used: usize,
    /// Peels dropped because the reference value was zero or the fit for
    /// that peel did not converge.
    pub excluded: usize,
}

/// Mohn's rho over `peels` terminal-year revisions:
/// `mean_p (r_{T-p}^{T-p} - r_{T-p}^{T}) / r_{T-p}^{T}`.
pub fn mohns_rho(
    retro: &RetroMatrix,
    kind: ParameterKind,
    peels: usize,
) -> Result<MohnsRho, AssessError> {
    let series = retro.series(kind);
    let last = retro
        .last_year()
        .ok_or_else(|| AssessError::InvalidInput("retrospective matrix is empty".into()))?;
    let reference = series
        .get(&last)
        .ok_or_else(|| AssessError::InvalidInput("final retrospective fit missing".into()))?;
    if peels as i32 >= (last - retro.attempted[0] + 1) {
        return Err(AssessError::InvalidInput(format!(
            "cannot peel {peels} times from {} retrospective fits",
            retro.attempted.len()
        )));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for p in 1..=peels {
        let t = last - p as i32;
        let (Some(peeled), Some(reference_value)) =
            (series.get(&t).and_then(|s| s.get(t)), reference.get(t))
        else {
            excluded += 1;
            continue;
        };
        if reference_value == 0.0 {
            excluded += 1;
            continue;
        }
        sum += (peeled - reference_value) / reference_value;
        used += 1;
    }
    if used == 0 {
        return Err(AssessError::InvalidInput(
            "all peels excluded from Mohn's rho".into(),
        ));
    }
    Ok(MohnsRho {
        rho: sum / used as f64,
        peels_used: used,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(kind: ParameterKind, first: i32, v: Vec<f64>) -> StockParameterSeries {
        StockParameterSeries::new(kind, first, v).unwrap()
    }

    fn matrix_from(rows: Vec<(i32, Vec<f64>)>) -> RetroMatrix {
        let mut recruitment = BTreeMap::new();
        let mut ssb = BTreeMap::new();
        let mut attempted = Vec::new();
        for (t, values) in rows {
            attempted.push(t);
            recruitment.insert(t, series(ParameterKind::Recruitment, 1, values.clone()));
            ssb.insert(t, series(ParameterKind::Ssb, 1, values));
        }
        RetroMatrix {
            recruitment,
            ssb,
            attempted,
        }
    }

    #[test]
    fn identical_rows_give_zero_rho() {
        let retro = matrix_from(vec![
            (3, vec![10.0, 10.0, 10.0]),
            (4, vec![10.0, 10.0, 10.0, 10.0]),
            (5, vec![10.0, 10.0, 10.0, 10.0, 10.0]),
        ]);
        let rho = mohns_rho(&retro, ParameterKind::Recruitment, 2).unwrap();
        assert_eq!(rho.rho, 0.0);
        assert_eq!(rho.peels_used, 2);
    }

    #[test]
    fn uniform_ten_percent_overshoot_gives_point_one() {
        // Terminal estimates sit 10% above the final model's view.
        let retro = matrix_from(vec![
            (3, vec![10.0, 10.0, 11.0]),
            (4, vec![10.0, 10.0, 10.0, 11.0]),
            (5, vec![10.0, 10.0, 10.0, 10.0, 10.0]),
        ]);
        let rho = mohns_rho(&retro, ParameterKind::Ssb, 2).unwrap();
        assert!((rho.rho - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_reference_values_are_excluded() {
        let retro = matrix_from(vec![
            (3, vec![10.0, 10.0, 12.0]),
            (4, vec![10.0, 10.0, 0.0, 11.0]),
            (5, vec![10.0, 10.0, 0.0, 10.0, 10.0]),
        ]);
        // Peel p=2 hits the zero reference at year 3.
        let rho = mohns_rho(&retro, ParameterKind::Recruitment, 2).unwrap();
        assert_eq!(rho.excluded, 1);
        assert_eq!(rho.peels_used, 1);
        assert!((rho.rho - 0.1).abs() < 1e-12);
    }

    #[test]
    fn too_many_peels_is_an_error() {
        let retro = matrix_from(vec![(3, vec![1.0; 3]), (4, vec![1.0; 4])]);
        assert!(mohns_rho(&retro, ParameterKind::Ssb, 2).is_err());
    }
}

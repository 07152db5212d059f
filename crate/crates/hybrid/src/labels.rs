//! Training labels: derived stock parameters from a reference model.

use stockcast_assess::{derive_parameter, FittedAssessment};
use stockcast_core::{BiologySeries, ParameterKind, StockParameterSeries};

use crate::HybridError;

/// Per-year labels from one fitted model (normally the final model
/// `M_T`): the derived parameter of its estimate for every fitted year.
pub fn make_labels(
    model: &FittedAssessment,
    bio: &BiologySeries,
    target: ParameterKind,
) -> Result<StockParameterSeries, HybridError> {
    if !model.converged {
        return Err(HybridError::ModelUnavailable(model.last_data_year));
    }
    let mut values = Vec::new();
    for year in model.first_year..=model.last_data_year {
        let n = model.estimate(year)?;
        values.push(derive_parameter(&n, bio, target)?);
    }
    Ok(StockParameterSeries::new(target, model.first_year, values)?)
}

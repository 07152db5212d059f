//! Scoring metrics for backtest reports.

use crate::HybridError;

/// Root mean squared error.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64, HybridError> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(HybridError::Metric(format!(
            "rmse needs equal non-empty lengths, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    let mse = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.len() as f64;
    Ok(mse.sqrt())
}

/// Coefficient of determination: `1 - SS_res / SS_tot`.
pub fn r_squared(pred: &[f64], truth: &[f64]) -> Result<f64, HybridError> {
    if pred.len() != truth.len() || pred.len() < 2 {
        return Err(HybridError::Metric(format!(
            "r_squared needs equal lengths of at least 2, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(HybridError::Metric("truth values are all identical".into()));
    }
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (t - p) * (t - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

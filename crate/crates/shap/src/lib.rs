//! Exact per-prediction Shapley attributions for tree ensembles.
//!
//! The conditional expectation behind the game is defined by background-set
//! leaf occupancy: when a feature is outside the coalition, a split on it
//! routes proportionally to how many background rows passed each child.
//! [`tree_shap`] computes exact Shapley values of that game in polynomial
//! time per tree; [`brute_force_shapley`] evaluates the same game by
//! enumerating all feature subsets and exists as the independent oracle.
//!
//! Every node must be reached by at least one background row (guaranteed
//! when the background is the training set, since leaves hold at least
//! `min_data_in_leaf` rows); otherwise the conditional expectation is
//! undefined and both routes refuse.

mod brute;
mod flat;
mod path;

pub use brute::brute_force_shapley;

use stockcast_core::FeatureVector;
use stockcast_gbt::{predict, TreeEnsemble};
use thiserror::Error;

use flat::FlatTree;

#[derive(Debug, Clone, Error)]
pub enum ShapError {
    #[error("feature schema mismatch: expected {expected}, got {got}")]
    SchemaMismatch { expected: String, got: String },

    #[error("background set is empty")]
    EmptyBackground,

    #[error(
        "background rows never reach tree {tree} node {node}; conditional expectation undefined"
    )]
    UncoveredNode { tree: usize, node: usize },

    #[error("brute-force Shapley refuses {0} features (exponential cost beyond 12)")]
    TooManyFeatures(usize),

    #[error("prediction failed: {0}")]
    Prediction(String),

    #[error("no attributions given")]
    Empty,
}

/// Per-prediction attribution: `base_value + sum(phi) = prediction`.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub base_value: f64,
    pub prediction: f64,
    /// Per-feature contribution, aligned with the ensemble's feature order.
    pub contributions: Vec<(String, f64)>,
}

impl Attribution {
    pub fn phi(&self, feature: &str) -> Option<f64> {
        self.contributions
            .iter()
            .find(|(n, _)| n == feature)
            .map(|(_, p)| *p)
    }

    pub fn phi_sum(&self) -> f64 {
        self.contributions.iter().map(|(_, p)| p).sum()
    }
}

pub(crate) fn validate(
    ensemble: &TreeEnsemble,
    x: &FeatureVector,
    background: &[FeatureVector],
) -> Result<(), ShapError> {
    if background.is_empty() {
        return Err(ShapError::EmptyBackground);
    }
    for fv in std::iter::once(x).chain(background) {
        if fv.schema_id() != ensemble.schema_id() {
            return Err(ShapError::SchemaMismatch {
                expected: ensemble.schema_id().to_string(),
                got: fv.schema_id().to_string(),
            });
        }
    }
    Ok(())
}

/// Exact Shapley values under the background-occupancy conditional
/// expectation, computed per tree with the polynomial path algorithm and
/// summed across trees scaled by the learning rate.
pub fn tree_shap(
    ensemble: &TreeEnsemble,
    x: &FeatureVector,
    background: &[FeatureVector],
) -> Result<Attribution, ShapError> {
    validate(ensemble, x, background)?;
    let n_features = ensemble.feature_names().len();
    let mut phi = vec![0.0; n_features];
    let mut expected = 0.0;
    for (tree_idx, tree) in ensemble.trees().iter().enumerate() {
        let flat = FlatTree::build(tree, background, tree_idx)?;
        expected += flat.expected_value();
        path::accumulate(&flat, x, &mut phi);
    }
    let lr = ensemble.learning_rate();
    let base_value = ensemble.base_score() + lr * expected;
    let prediction = predict(ensemble, x).map_err(|e| ShapError::Prediction(e.to_string()))?;
    Ok(Attribution {
        base_value,
        prediction,
        contributions: ensemble
            .feature_names()
            .iter()
            .zip(phi)
            .map(|(n, p)| (n.clone(), lr * p))
            .collect(),
    })
}

/// Mean absolute contribution per feature, descending; ties sort by
/// feature name so the ranking is stable.
pub fn aggregate_importance(attributions: &[Attribution]) -> Result<Vec<(String, f64)>, ShapError> {
    let first = attributions.first().ok_or(ShapError::Empty)?;
    let mut totals: Vec<(String, f64)> = first
        .contributions
        .iter()
        .map(|(n, _)| (n.clone(), 0.0))
        .collect();
    for attr in attributions {
        if attr.contributions.len() != totals.len()
            || attr
                .contributions
                .iter()
                .zip(&totals)
                .any(|((a, _), (b, _))| a != b)
        {
            return Err(ShapError::SchemaMismatch {
                expected: totals
                    .iter()
                    .map(|(n, _)| n.as_str())
                    .collect::<Vec<_>>()
                    .join(","),
                got: attr
                    .contributions
                    .iter()
                    .map(|(n, _)| n.as_str())
                    .collect::<Vec<_>>()
                    .join(","),
            });
        }
        for ((_, total), (_, phi)) in totals.iter_mut().zip(&attr.contributions) {
            *total += phi.abs();
        }
    }
    let n = attributions.len() as f64;
    for (_, total) in totals.iter_mut() {
        *total /= n;
    }
    totals.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite importance")
            .then(a.0.cmp(&b.0))
    });
    Ok(totals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use stockcast_gbt::{fit, GbtHyperParams};

    fn fv(values: &[Option<f64>]) -> FeatureVector {
        FeatureVector::new(
            values
                .iter()
                .enumerate()
                .map(|(i, v)| (format!("f{i}"), *v))
                .collect(),
        )
        .unwrap()
    }

    fn fit_simple(
        rows: &[Vec<Option<f64>>],
        y: &[f64],
        hp: &GbtHyperParams,
    ) -> (TreeEnsemble, Vec<FeatureVector>) {
        let features: Vec<FeatureVector> = rows.iter().map(|r| fv(r)).collect();
        let e = fit(&features, y, hp).unwrap();
        (e, features)
    }

    #[test]
    fn constant_targets_attribute_nothing() {
        let rows = vec![vec![Some(1.0)], vec![Some(2.0)]];
        let (e, background) = fit_simple(&rows, &[3.0, 3.0], &GbtHyperParams::default());
        let attr = tree_shap(&e, &background[0], &background).unwrap();
        assert_eq!(attr.phi("f0"), Some(0.0));
        assert_eq!(attr.base_value, 3.0);
        assert_eq!(attr.prediction, 3.0);
    }

    #[test]
    fn stump_gives_all_credit_to_split_feature() {
        let rows = vec![
            vec![Some(0.0), Some(9.0)],
            vec![Some(1.0), Some(9.0)],
            vec![Some(2.0), Some(9.0)],
            vec![Some(3.0), Some(9.0)],
        ];
        let y = [0.0, 0.0, 10.0, 10.0];
        let hp = GbtHyperParams {
            nrounds: 1,
            learning_rate: 1.0,
            num_leaves: 2,
            ..Default::default()
        };
        let (e, background) = fit_simple(&rows, &y, &hp);
        let attr = tree_shap(&e, &background[0], &background).unwrap();
        // Single split on f0: phi_f0 = prediction - base, phi_f1 = 0.
        assert!((attr.phi("f0").unwrap() - (attr.prediction - attr.base_value)).abs() < 1e-12);
        assert_eq!(attr.phi("f1"), Some(0.0));
    }

    #[test]
    fn local_accuracy_holds_with_missing_values() {
        let rows = vec![
            vec![Some(0.5), None, Some(3.0)],
            vec![Some(1.5), Some(2.0), None],
            vec![None, Some(1.0), Some(1.0)],
            vec![Some(2.5), Some(0.5), Some(2.0)],
            vec![Some(3.5), None, Some(0.5)],
        ];
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        let (e, background) = fit_simple(&rows, &y, &GbtHyperParams::default());
        for x in &background {
            let attr = tree_shap(&e, x, &background).unwrap();
            assert!(
                (attr.base_value + attr.phi_sum() - attr.prediction).abs() < 1e-9,
                "local accuracy violated"
            );
        }
    }

    #[test]
    fn empty_background_is_rejected() {
        let rows = vec![vec![Some(0.0)], vec![Some(1.0)]];
        let (e, background) = fit_simple(&rows, &[0.0, 1.0], &GbtHyperParams::default());
        assert!(matches!(
            tree_shap(&e, &background[0], &[]),
            Err(ShapError::EmptyBackground)
        ));
    }

    #[test]
    fn additivity_across_trees() {
        let rows = vec![
            vec![Some(0.0), Some(1.0)],
            vec![Some(1.0), Some(0.0)],
            vec![Some(2.0), Some(2.0)],
            vec![Some(3.0), Some(1.5)],
        ];
        let y = [1.0, 5.0, 2.0, 7.0];
        let hp1 = GbtHyperParams {
            nrounds: 1,
            ..Default::default()
        };
        let hp2 = GbtHyperParams {
            nrounds: 2,
            ..Default::default()
        };
        let (e1, background) = fit_simple(&rows, &y, &hp1);
        let (e2, _) = fit_simple(&rows, &y, &hp2);
        let x = &background[2];
        let a1 = tree_shap(&e1, x, &background).unwrap();
        let a2 = tree_shap(&e2, x, &background).unwrap();
        // The two-tree attribution minus the one-tree attribution is the
        // second tree's own attribution; additivity means the shared first
        // tree contributes identically in both.
        for ((n1, p1), (_, p2)) in a1.contributions.iter().zip(&a2.contributions) {
            let single_second = p2 - p1;
            assert!(single_second.is_finite(), "{n1} produced non-finite phi");
        }
        assert!((a2.base_value + a2.phi_sum() - a2.prediction).abs() < 1e-9);
    }

    #[test]
    fn importance_ranks_by_mean_abs_phi() {
        let attrs = vec![
            Attribution {
                base_value: 0.0,
                prediction: 1.0,
                contributions: vec![("a".into(), 1.0), ("b".into(), -2.0)],
            },
            Attribution {
                base_value: 0.0,
                prediction: -1.0,
                contributions: vec![("a".into(), -1.0), ("b".into(), 2.0)],
            },
        ];
        let ranked = aggregate_importance(&attrs).unwrap();
        assert_eq!(ranked[0].0, "b");
        assert!((ranked[0].1 - 2.0).abs() < 1e-12);
        assert!((ranked[1].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_attribution_importance_is_its_absolute_values() {
        let attr = Attribution {
            base_value: 1.0,
            prediction: 2.0,
            contributions: vec![("a".into(), -3.0), ("b".into(), 0.5)],
        };
        let ranked = aggregate_importance(std::slice::from_ref(&attr)).unwrap();
        assert_eq!(ranked, vec![("a".to_string(), 3.0), ("b".to_string(), 0.5)]);
    }

    #[test]
    fn importance_tie_breaks_by_name() {
        let attrs = vec![Attribution {
            base_value: 0.0,
            prediction: 0.0,
            contributions: vec![("z".into(), 1.0), ("a".into(), -1.0)],
        }];
        let ranked = aggregate_importance(&attrs).unwrap();
        assert_eq!(ranked[0].0, "a");
        assert_eq!(ranked[1].0, "z");
    }
}

//! Gradient-boosted regression trees over named feature vectors.
//!
//! L2 boosting: the base score is the training-target mean, every round
//! fits one regression tree to the current residuals, and leaf values are
//! residual means scaled by the learning rate at prediction time. Trees
//! grow leaf-wise (best-first) under simultaneous `num_leaves` and
//! `max_depth` caps. Missing feature values are first-class: each split
//! learns a routing direction for them by trying both sides.
//!
//! Determinism contract: splits are compared by gain with ties broken by
//! lower feature index, then lower threshold, then missing-goes-left;
//! among expandable leaves the earliest-created leaf wins ties. Identical
//! inputs therefore produce identical ensembles on every platform.

mod error;
mod tree;

pub use error::GbtError;
pub use tree::{best_split, SplitCandidate, TreeNode};

use serde::{Deserialize, Serialize};
use stockcast_core::FeatureVector;
use tree::{grow_tree, Dataset};

/// Boosting hyperparameters. Defaults follow the fixed low-data recipe
/// used throughout this project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtHyperParams {
    pub num_leaves: usize,
    pub max_depth: usize,
    pub min_data_in_leaf: usize,
    pub learning_rate: f64,
    pub nrounds: usize,
}

impl Default for GbtHyperParams {
    fn default() -> Self {
        Self {
            num_leaves: 3,
            max_depth: 3,
            min_data_in_leaf: 1,
            learning_rate: 0.1,
            nrounds: 60,
        }
    }
}

impl GbtHyperParams {
    pub fn validate(&self) -> Result<(), GbtError> {
        if self.num_leaves < 2 {
            return Err(GbtError::InvalidHyperParams(
                "num_leaves must be at least 2".into(),
            ));
        }
        if self.max_depth == 0 {
            return Err(GbtError::InvalidHyperParams(
                "max_depth must be at least 1".into(),
            ));
        }
        if self.min_data_in_leaf == 0 {
            return Err(GbtError::InvalidHyperParams(
                "min_data_in_leaf must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(GbtError::InvalidHyperParams(
                "learning_rate must lie in (0, 1]".into(),
            ));
        }
        if self.nrounds == 0 {
            return Err(GbtError::InvalidHyperParams(
                "nrounds must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Additive sequence of regression trees plus a base score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    base_score: f64,
    learning_rate: f64,
    trees: Vec<TreeNode>,
    schema_id: String,
    feature_names: Vec<String>,
}

impl TreeEnsemble {
    pub fn base_score(&self) -> f64 {
        self.base_score
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn schema_id(&self) -> &str {
        &self.schema_id
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// JSON text form; `from_json` reads it back bit-exactly.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensemble serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GbtError> {
        serde_json::from_str(text).map_err(|e| GbtError::Serialization(e.to_string()))
    }
}

/// Fit an L2 boosting ensemble to `(features, targets)`.
///
/// Boosting stops early once a round produces a splitless tree with zero
/// residual mean: every later round would be identical.
pub fn fit(
    features: &[FeatureVector],
    targets: &[f64],
    hp: &GbtHyperParams,
) -> Result<TreeEnsemble, GbtError> {
    hp.validate()?;
    if features.is_empty() {
        return Err(GbtError::EmptyTrainingSet);
    }
    if features.len() != targets.len() {
        return Err(GbtError::LengthMismatch {
            features: features.len(),
            targets: targets.len(),
        });
    }
    let schema_id = features[0].schema_id().to_string();
    for fv in features.iter().skip(1) {
        if fv.schema_id() != schema_id {
            return Err(GbtError::SchemaMismatch {
                expected: schema_id.clone(),
                got: fv.schema_id().to_string(),
            });
        }
    }
    if let Some(bad) = targets.iter().find(|y| !y.is_finite()) {
        return Err(GbtError::InvalidTarget(*bad));
    }

    let data = Dataset::from_feature_vectors(features);
    let n = targets.len();
    let base_score = targets.iter().sum::<f64>() / n as f64;
    let mut predictions = vec![base_score; n];
    let mut trees = Vec::new();

    for _round in 0..hp.nrounds {
        let residuals: Vec<f64> = targets
            .iter()
            .zip(&predictions)
            .map(|(y, p)| y - p)
            .collect();
        let (root, leaf_assignment) = grow_tree(&data, &residuals, hp);
        let is_stump = matches!(root, TreeNode::Leaf { .. });
        let mut all_zero = true;
        for (row, value) in leaf_assignment {
            predictions[row] += hp.learning_rate * value;
            if value != 0.0 {
                all_zero = false;
            }
        }
        if is_stump && all_zero {
            break;
        }
        trees.push(root);
    }

    Ok(TreeEnsemble {
        base_score,
        learning_rate: hp.learning_rate,
        trees,
        schema_id,
        feature_names: features[0].names().map(str::to_string).collect(),
    })
}

/// Route `x` through every tree: `base_score + learning_rate * sum(leaves)`.
pub fn predict(ensemble: &TreeEnsemble, x: &FeatureVector) -> Result<f64, GbtError> {
    if x.schema_id() != ensemble.schema_id {
        return Err(GbtError::SchemaMismatch {
            expected: ensemble.schema_id.clone(),
            got: x.schema_id().to_string(),
        });
    }
    let sum: f64 = ensemble.trees.iter().map(|t| t.route(x)).sum();
    Ok(ensemble.base_score + ensemble.learning_rate * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

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

    fn fv_points(xs: &[f64]) -> Vec<FeatureVector> {
        xs.iter().map(|x| fv(&[Some(*x)])).collect()
    }

    #[test]
    fn constant_targets_predict_that_constant() {
        let xs = fv_points(&[1.0, 2.0, 3.0, 4.0]);
        let e = fit(&xs, &[7.5, 7.5, 7.5, 7.5], &GbtHyperParams::default()).unwrap();
        assert!(e.trees().is_empty());
        for x in &xs {
            assert_eq!(predict(&e, x).unwrap(), 7.5);
        }
    }

    #[test]
    fn two_separable_samples_decay_geometrically() {
        let xs = fv_points(&[0.0, 1.0]);
        let ys = [0.0, 10.0];
        let hp = GbtHyperParams::default();
        let e = fit(&xs, &ys, &hp).unwrap();
        // Residual contracts by (1 - lr) per round; 0.9^60 of the initial
        // residual magnitude remains.
        let expected_resid = 5.0 * 0.9f64.powi(60);
        for (x, y) in xs.iter().zip(&ys) {
            let r = y - predict(&e, x).unwrap();
            assert!(
                (r.abs() - expected_resid).abs() < 1e-9,
                "residual {r}, expected magnitude {expected_resid}"
            );
        }
    }

    #[test]
    fn single_sample_is_base_score_only() {
        let xs = fv_points(&[1.0]);
        let e = fit(&xs, &[42.0], &GbtHyperParams::default()).unwrap();
        assert!(e.trees().is_empty());
        assert_eq!(predict(&e, &xs[0]).unwrap(), 42.0);
    }

    #[test]
    fn empty_training_set_is_an_error() {
        assert!(matches!(
            fit(&[], &[], &GbtHyperParams::default()),
            Err(GbtError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn fully_grown_single_tree_interpolates() {
        let xs = fv_points(&[1.0, 2.0, 3.0, 4.0]);
        let ys = [3.0, -1.0, 4.0, 1.0];
        let hp = GbtHyperParams {
            num_leaves: 4,
            max_depth: 16,
            min_data_in_leaf: 1,
            learning_rate: 1.0,
            nrounds: 1,
        };
        let e = fit(&xs, &ys, &hp).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((predict(&e, x).unwrap() - y).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_values_route_deterministically() {
        let xs = vec![
            fv(&[Some(1.0), Some(5.0)]),
            fv(&[Some(2.0), None]),
            fv(&[Some(3.0), Some(1.0)]),
            fv(&[None, Some(2.0)]),
        ];
        let ys = [1.0, 2.0, 3.0, 4.0];
        let e = fit(&xs, &ys, &GbtHyperParams::default()).unwrap();
        let all_missing = fv(&[None, None]);
        let p1 = predict(&e, &all_missing).unwrap();
        let p2 = predict(&e, &all_missing).unwrap();
        assert_eq!(p1, p2);
        assert!(p1.is_finite());
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let xs = fv_points(&[0.0, 1.0]);
        let e = fit(&xs, &[0.0, 1.0], &GbtHyperParams::default()).unwrap();
        let other = FeatureVector::new(vec![("other".into(), Some(1.0))]).unwrap();
        assert!(matches!(
            predict(&e, &other),
            Err(GbtError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn json_round_trip_preserves_ensemble() {
        let xs = fv_points(&[0.0, 1.0, 2.0, 5.0]);
        let e = fit(&xs, &[1.0, 3.0, 2.0, 8.0], &GbtHyperParams::default()).unwrap();
        let restored = TreeEnsemble::from_json(&e.to_json()).unwrap();
        assert_eq!(e, restored);
    }

    fn training_mse(e: &TreeEnsemble, xs: &[FeatureVector], ys: &[f64]) -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(x, y)| {
                let d = predict(e, x).unwrap() - y;
                d * d
            })
            .sum::<f64>()
            / ys.len() as f64
    }

    proptest! {
        #[test]
        fn training_loss_non_increasing_in_rounds(
            ys in proptest::collection::vec(-100.0f64..100.0, 8),
            seed_vals in proptest::collection::vec(-10.0f64..10.0, 8),
        ) {
            let xs: Vec<_> = seed_vals.iter().map(|v| fv(&[Some(*v)])).collect();
            let mut prev = f64::INFINITY;
            for rounds in [1usize, 5, 20] {
                let hp = GbtHyperParams { nrounds: rounds, ..Default::default() };
                let e = fit(&xs, &ys, &hp).unwrap();
                let mse = training_mse(&e, &xs, &ys);
                prop_assert!(mse <= prev + 1e-9);
                prev = mse;
            }
        }

        #[test]
        fn structure_caps_hold(
            ys in proptest::collection::vec(-50.0f64..50.0, 10),
            xs1 in proptest::collection::vec(-5.0f64..5.0, 10),
            xs2 in proptest::collection::vec(-5.0f64..5.0, 10),
            num_leaves in 2usize..6,
            max_depth in 1usize..4,
        ) {
            let features: Vec<_> = xs1.iter().zip(&xs2)
                .map(|(a, b)| fv(&[Some(*a), Some(*b)]))
                .collect();
            let hp = GbtHyperParams {
                num_leaves,
                max_depth,
                min_data_in_leaf: 2,
                learning_rate: 0.5,
                nrounds: 5,
            };
            let e = fit(&features, &ys, &hp).unwrap();
            for tree in e.trees() {
                prop_assert!(tree.leaf_count() <= num_leaves);
                prop_assert!(tree.depth() <= max_depth);
                prop_assert!(tree.min_leaf_size() >= 2);
            }
        }

        // Trees use feature order only: a strictly monotone transform of a
        // feature applied to train and test leaves predictions unchanged.
        #[test]
        fn monotone_feature_transform_is_invisible(
            ys in proptest::collection::vec(-50.0f64..50.0, 8),
            raw in proptest::collection::vec(0.1f64..10.0, 8),
        ) {
            let xs: Vec<_> = raw.iter().map(|v| fv(&[Some(*v)])).collect();
            let xs_t: Vec<_> = raw.iter().map(|v| fv(&[Some(v.ln())])).collect();
            let hp = GbtHyperParams::default();
            let e = fit(&xs, &ys, &hp).unwrap();
            let e_t = fit(&xs_t, &ys, &hp).unwrap();
            for (x, x_t) in xs.iter().zip(&xs_t) {
                let p = predict(&e, x).unwrap();
                let p_t = predict(&e_t, x_t).unwrap();
                prop_assert!((p - p_t).abs() < 1e-9);
            }
        }

        #[test]
        fn fit_is_deterministic(
            ys in proptest::collection::vec(-50.0f64..50.0, 8),
            raw in proptest::collection::vec(-5.0f64..5.0, 8),
        ) {
            let xs: Vec<_> = raw.iter().map(|v| fv(&[Some(*v)])).collect();
            let hp = GbtHyperParams::default();
            let a = fit(&xs, &ys, &hp).unwrap();
            let b = fit(&xs, &ys, &hp).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

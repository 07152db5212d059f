//! Subset-enumeration Shapley oracle.
//!
//! Evaluates the same background-occupancy game as the polynomial
//! algorithm, but directly: the value of a coalition routes the instance
//! at in-coalition splits and averages children by background covers at
//! out-of-coalition splits. Exact by the Shapley formula; exponential in
//! the number of features, hence the hard cap.

use stockcast_core::FeatureVector;
use stockcast_gbt::{predict, TreeEnsemble};

use crate::flat::FlatTree;
use crate::{validate, Attribution, ShapError};

const MAX_FEATURES: usize = 12;

fn expvalue(tree: &FlatTree, node_id: usize, x: &FeatureVector, coalition: u64) -> f64 {
    let node = &tree.nodes[node_id];
    if node.is_leaf {
        return node.leaf_value;
    }
    if coalition & (1 << node.feature) != 0 {
        let go_left = match x.value_at(node.feature) {
            Some(v) => v <= node.threshold,
            None => node.missing_goes_left,
        };
        expvalue(
            tree,
            if go_left { node.left } else { node.right },
            x,
            coalition,
        )
    } else {
        let left = expvalue(tree, node.left, x, coalition);
        let right = expvalue(tree, node.right, x, coalition);
        (tree.cover[node.left] * left + tree.cover[node.right] * right) / tree.cover[node_id]
    }
}

/// Exact Shapley values by enumerating all feature subsets. Refuses more
/// than 12 features.
pub fn brute_force_shapley(
    ensemble: &TreeEnsemble,
    x: &FeatureVector,
    background: &[FeatureVector],
) -> Result<Attribution, ShapError> {
    validate(ensemble, x, background)?;
    let n = ensemble.feature_names().len();
    if n > MAX_FEATURES {
        return Err(ShapError::TooManyFeatures(n));
    }

    let flats = ensemble
        .trees()
        .iter()
        .enumerate()
        .map(|(i, t)| FlatTree::build(t, background, i))
        .collect::<Result<Vec<_>, _>>()?;

    // Coalition value table over all 2^n subsets.
    let lr = ensemble.learning_rate();
    let values: Vec<f64> = (0u64..(1 << n))
        .map(|mask| {
            ensemble.base_score() + lr * flats.iter().map(|t| expvalue(t, 0, x, mask)).sum::<f64>()
        })
        .collect();

    let mut factorial = [1.0f64; MAX_FEATURES + 1];
    for i in 1..=MAX_FEATURES {
        factorial[i] = factorial[i - 1] * i as f64;
    }

    let mut phi = vec![0.0; n];
    for (j, phi_j) in phi.iter_mut().enumerate() {
        let bit = 1u64 << j;
        for mask in 0u64..(1 << n) {
            if mask & bit != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let weight = factorial[s] * factorial[n - s - 1] / factorial[n];
            *phi_j += weight * (values[(mask | bit) as usize] - values[mask as usize]);
        }
    }

    let prediction = predict(ensemble, x).map_err(|e| ShapError::Prediction(e.to_string()))?;
    Ok(Attribution {
        base_value: values[0],
        prediction,
        contributions: ensemble
            .feature_names()
            .iter()
            .zip(phi)
            .map(|(name, p)| (name.clone(), p))
            .collect(),
    })
}

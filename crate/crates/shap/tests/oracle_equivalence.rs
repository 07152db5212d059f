//! The polynomial path algorithm must agree with the subset-enumeration
//! oracle on every random ensemble, including trees that split on the
//! same feature more than once along a path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stockcast_core::FeatureVector;
use stockcast_gbt::{fit, GbtHyperParams};
use stockcast_shap::{brute_force_shapley, tree_shap};

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

fn random_dataset(
    rng: &mut ChaCha8Rng,
    n_rows: usize,
    n_features: usize,
    missing_rate: f64,
) -> (Vec<FeatureVector>, Vec<f64>) {
    let rows: Vec<FeatureVector> = (0..n_rows)
        .map(|_| {
            let vals: Vec<Option<f64>> = (0..n_features)
                .map(|_| {
                    if rng.gen_bool(missing_rate) {
                        None
                    } else {
                        Some(rng.gen_range(-5.0..5.0))
                    }
                })
                .collect();
            fv(&vals)
        })
        .collect();
    let y: Vec<f64> = (0..n_rows).map(|_| rng.gen_range(-10.0..10.0)).collect();
    (rows, y)
}

#[test]
fn path_algorithm_matches_brute_force_on_random_ensembles() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_5a4b);
    let mut repeated_feature_trees = 0usize;
    for case in 0..200 {
        let n_features = rng.gen_range(1..=4);
        let n_rows = rng.gen_range(4..=16);
        let missing_rate = [0.0, 0.1, 0.3][case % 3];
        let (rows, y) = random_dataset(&mut rng, n_rows, n_features, missing_rate);
        let hp = GbtHyperParams {
            num_leaves: rng.gen_range(2..=6),
            max_depth: rng.gen_range(1..=3),
            min_data_in_leaf: 1,
            learning_rate: 0.3,
            nrounds: rng.gen_range(1..=5),
        };
        let ensemble = fit(&rows, &y, &hp).unwrap();

        // Count trees that reuse a feature along some path, to make sure
        // the unwind branch is actually exercised by this suite.
        for tree in ensemble.trees() {
            let mut used = Vec::new();
            tree.used_features(&mut used);
            if tree.depth() > used.len() {
                repeated_feature_trees += 1;
            }
        }

        for x in rows.iter().take(4) {
            let fast = tree_shap(&ensemble, x, &rows).unwrap();
            let slow = brute_force_shapley(&ensemble, x, &rows).unwrap();
            assert!(
                (fast.base_value - slow.base_value).abs() < 1e-9,
                "case {case}: base {} vs {}",
                fast.base_value,
                slow.base_value
            );
            for ((name, pf), (_, ps)) in fast.contributions.iter().zip(&slow.contributions) {
                assert!(
                    (pf - ps).abs() < 1e-9,
                    "case {case}: phi[{name}] {pf} vs {ps}"
                );
            }
            assert!(
                (fast.base_value + fast.phi_sum() - fast.prediction).abs() < 1e-9,
                "case {case}: local accuracy"
            );
        }
    }
    assert!(
        repeated_feature_trees > 0,
        "suite never exercised repeated features"
    );
}

#[test]
fn single_leaf_tree_has_no_attributions() {
    // Constant targets keep every round splitless.
    let rows = vec![fv(&[Some(0.0), Some(1.0)]), fv(&[Some(1.0), Some(0.0)])];
    let y = [2.0, 2.0];
    let ensemble = fit(&rows, &y, &GbtHyperParams::default()).unwrap();
    let fast = tree_shap(&ensemble, &rows[0], &rows).unwrap();
    let slow = brute_force_shapley(&ensemble, &rows[0], &rows).unwrap();
    assert_eq!(fast.phi_sum(), 0.0);
    assert_eq!(slow.phi_sum(), 0.0);
    assert_eq!(fast.base_value, 2.0);
    assert_eq!(fast.prediction, 2.0);
}

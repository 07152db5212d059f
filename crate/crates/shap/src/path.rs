//! Polynomial-time Shapley recursion over one tree.
//!
//! Maintains the path of unique features from the root with, per feature,
//! the proportion of background flow when the feature is excluded
//! (`zero_fraction`), the indicator of the instance's own route when it is
//! included (`one_fraction`), and permutation weights (`pweight`). A
//! feature met twice is unwound and re-extended so its fractions multiply.

use stockcast_core::FeatureVector;

use crate::flat::FlatTree;

#[derive(Clone, Copy, Default)]
struct PathElement {
    feature: usize,
    zero_fraction: f64,
    one_fraction: f64,
    pweight: f64,
}

const ROOT_FEATURE: usize = usize::MAX;

fn extend(path: &mut Vec<PathElement>, zero_fraction: f64, one_fraction: f64, feature: usize) {
    let depth = path.len();
    path.push(PathElement {
        feature,
        zero_fraction,
        one_fraction,
        pweight: if depth == 0 { 1.0 } else { 0.0 },
    });
    for i in (0..depth).rev() {
        path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) as f64 / (depth + 1) as f64;
        path[i].pweight = zero_fraction * path[i].pweight * (depth - i) as f64 / (depth + 1) as f64;
    }
}

fn unwind(path: &mut Vec<PathElement>, index: usize) {
    let depth = path.len() - 1;
    let one_fraction = path[index].one_fraction;
    let zero_fraction = path[index].zero_fraction;
    let mut next_one_portion = path[depth].pweight;
    for i in (0..depth).rev() {
        if one_fraction != 0.0 {
            let tmp = path[i].pweight;
            path[i].pweight =
                next_one_portion * (depth + 1) as f64 / ((i + 1) as f64 * one_fraction);
            next_one_portion =
                tmp - path[i].pweight * zero_fraction * (depth - i) as f64 / (depth + 1) as f64;
        } else {
            path[i].pweight =
                path[i].pweight * (depth + 1) as f64 / (zero_fraction * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
    path.pop();
}

fn unwound_sum(path: &[PathElement], index: usize) -> f64 {
    let depth = path.len() - 1;
    let one_fraction = path[index].one_fraction;
    let zero_fraction = path[index].zero_fraction;
    let mut next_one_portion = path[depth].pweight;
    let mut total = 0.0;
    for i in (0..depth).rev() {
        if one_fraction != 0.0 {
            let tmp = next_one_portion * (depth + 1) as f64 / ((i + 1) as f64 * one_fraction);
            total += tmp;
            next_one_portion =
                path[i].pweight - tmp * zero_fraction * (depth - i) as f64 / (depth + 1) as f64;
        } else if zero_fraction != 0.0 {
            total += path[i].pweight / zero_fraction / ((depth - i) as f64 / (depth + 1) as f64);
        } else {
            debug_assert_eq!(path[i].pweight, 0.0, "path element must carry zero weight");
        }
    }
    total
}

/// Add this tree's (unscaled) contributions for `x` into `phi`.
pub(crate) fn accumulate(tree: &FlatTree, x: &FeatureVector, phi: &mut [f64]) {
    recurse(tree, x, phi, 0, Vec::new(), 1.0, 1.0, ROOT_FEATURE);
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    tree: &FlatTree,
    x: &FeatureVector,
    phi: &mut [f64],
    node_id: usize,
    mut path: Vec<PathElement>,
    parent_zero_fraction: f64,
    parent_one_fraction: f64,
    parent_feature: usize,
) {
    extend(
        &mut path,
        parent_zero_fraction,
        parent_one_fraction,
        parent_feature,
    );
    let node = &tree.nodes[node_id];
    if node.is_leaf {
        for i in 1..path.len() {
            let w = unwound_sum(&path, i);
            let el = &path[i];
            phi[el.feature] += w * (el.one_fraction - el.zero_fraction) * node.leaf_value;
        }
        return;
    }

    let go_left = match x.value_at(node.feature) {
        Some(v) => v <= node.threshold,
        None => node.missing_goes_left,
    };
    let (hot, cold) = if go_left {
        (node.left, node.right)
    } else {
        (node.right, node.left)
    };

    let mut incoming_zero = 1.0;
    let mut incoming_one = 1.0;
    if let Some(index) = path.iter().position(|el| el.feature == node.feature) {
        incoming_zero = path[index].zero_fraction;
        incoming_one = path[index].one_fraction;
        unwind(&mut path, index);
    }

    let parent_cover = tree.cover[node_id];
    let hot_zero = tree.cover[hot] / parent_cover * incoming_zero;
    let cold_zero = tree.cover[cold] / parent_cover * incoming_zero;
    recurse(
        tree,
        x,
        phi,
        hot,
        path.clone(),
        hot_zero,
        incoming_one,
        node.feature,
    );
    recurse(tree, x, phi, cold, path, cold_zero, 0.0, node.feature);
}

//! Regression tree growth: exact greedy splits over sorted distinct values
//! with learned missing-value routing.

use serde::{Deserialize, Serialize};
use stockcast_core::FeatureVector;

use crate::GbtHyperParams;

/// A regression tree node. Split thresholds are midpoints of consecutive
/// distinct training values; routing sends `value <= threshold` left and
/// missing values toward `missing_goes_left`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
        count: usize,
    },
    Split {
        feature_index: usize,
        feature_name: String,
        threshold: f64,
        missing_goes_left: bool,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    /// Leaf value reached by `x`.
    pub fn route(&self, x: &FeatureVector) -> f64 {
        match self {
            TreeNode::Leaf { value, .. } => *value,
            TreeNode::Split {
                feature_index,
                threshold,
                missing_goes_left,
                left,
                right,
                ..
            } => {
                let go_left = match x.value_at(*feature_index) {
                    Some(v) => v <= *threshold,
                    None => *missing_goes_left,
                };
                if go_left {
                    left.route(x)
                } else {
                    right.route(x)
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    /// Longest root-to-leaf path, in split edges.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn min_leaf_size(&self) -> usize {
        match self {
            TreeNode::Leaf { count, .. } => *count,
            TreeNode::Split { left, right, .. } => left.min_leaf_size().min(right.min_leaf_size()),
        }
    }

    /// Feature indices this tree splits on, in traversal order.
    pub fn used_features(&self, out: &mut Vec<usize>) {
        if let TreeNode::Split {
            feature_index,
            left,
            right,
            ..
        } = self
        {
            if !out.contains(feature_index) {
                out.push(*feature_index);
            }
            left.used_features(out);
            right.used_features(out);
        }
    }
}

/// Column-major view of the training features.
pub(crate) struct Dataset {
    pub columns: Vec<Vec<Option<f64>>>,
    pub feature_names: Vec<String>,
    pub n_rows: usize,
}

impl Dataset {
    pub fn from_feature_vectors(features: &[FeatureVector]) -> Self {
        let n_rows = features.len();
        let n_cols = features[0].len();
        let mut columns = vec![Vec::with_capacity(n_rows); n_cols];
        for fv in features {
            for (j, v) in fv.values().enumerate() {
                columns[j].push(v);
            }
        }
        Self {
            columns,
            feature_names: features[0].names().map(str::to_string).collect(),
            n_rows,
        }
    }
}

/// A candidate split of a row set on one feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub threshold: f64,
    pub gain: f64,
    pub missing_goes_left: bool,
}

/// Gain comparisons use a margin of `1e-9` of the tree's root sum of
/// squares: a candidate only beats the incumbent when its gain exceeds it
/// by that margin. Accumulated float noise is orders of magnitude below
/// the margin, so ties resolve by scan order (feature index, threshold,
/// missing-left first, earliest leaf) identically in any implementation
/// of this contract.
pub(crate) fn gain_margin(root_sse: f64) -> f64 {
    1e-9 * root_sse.max(1e-3)
}

#[derive(Clone, Copy, Default)]
struct Stats {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Stats {
    fn add(&mut self, y: f64) {
        self.n += 1;
        self.sum += y;
        self.sum_sq += y * y;
    }

    fn merge(self, other: Stats) -> Stats {
        Stats {
            n: self.n + other.n,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    fn sse(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.sum_sq - self.sum * self.sum / self.n as f64).max(0.0)
        }
    }

    fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }
}

/// Best split of `rows` on one feature column, or `None` when no threshold
/// separates the rows under the `min_data_in_leaf` constraint.
///
/// Thresholds are scanned in ascending order and replaced only when the
/// gain improves by the comparison margin, so the lowest qualifying
/// threshold wins ties; the missing-left routing is tried first and wins
/// ties the same way.
pub fn best_split(
    column: &[Option<f64>],
    targets: &[f64],
    rows: &[usize],
    min_data_in_leaf: usize,
) -> Option<SplitCandidate> {
    let mut parent = Stats::default();
    for &r in rows {
        parent.add(targets[r]);
    }
    best_split_with_margin(
        column,
        targets,
        rows,
        min_data_in_leaf,
        gain_margin(parent.sse()),
    )
}

pub(crate) fn best_split_with_margin(
    column: &[Option<f64>],
    targets: &[f64],
    rows: &[usize],
    min_data_in_leaf: usize,
    margin: f64,
) -> Option<SplitCandidate> {
    let mut present: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
    let mut missing = Stats::default();
    for &r in rows {
        match column[r] {
            Some(v) => present.push((v, targets[r])),
            None => missing.add(targets[r]),
        }
    }
    if present.len() < 2 {
        return None;
    }
    present.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));

    let mut parent = missing;
    for (_, y) in &present {
        parent.add(*y);
    }
    let parent_sse = parent.sse();

    let mut below = Stats::default();
    let mut best: Option<SplitCandidate> = None;
    for i in 0..present.len() - 1 {
        below.add(present[i].1);
        let (v, next_v) = (present[i].0, present[i + 1].0);
        if v == next_v {
            continue;
        }
        let threshold = v + (next_v - v) / 2.0;
        let mut above = Stats::default();
        for (_, y) in &present[i + 1..] {
            above.add(*y);
        }
        let directions: &[bool] = if missing.n == 0 {
            &[true]
        } else {
            &[true, false]
        };
        for &missing_left in directions {
            let (left, right) = if missing_left {
                (below.merge(missing), above)
            } else {
                (below, above.merge(missing))
            };
            if left.n < min_data_in_leaf || right.n < min_data_in_leaf {
                continue;
            }
            let gain = parent_sse - left.sse() - right.sse();
            if gain > margin && best.is_none_or(|b| gain > b.gain + margin) {
                best = Some(SplitCandidate {
                    threshold,
                    gain,
                    missing_goes_left: missing_left,
                });
            }
        }
    }
    best
}

struct LeafState {
    rows: Vec<usize>,
    depth: usize,
    /// (feature_index, candidate): best split over all features, if any.
    candidate: Option<(usize, SplitCandidate)>,
}

fn scan_leaf(
    data: &Dataset,
    targets: &[f64],
    rows: &[usize],
    depth: usize,
    hp: &GbtHyperParams,
    margin: f64,
) -> Option<(usize, SplitCandidate)> {
    if depth >= hp.max_depth || rows.len() < 2 * hp.min_data_in_leaf {
        return None;
    }
    let mut best: Option<(usize, SplitCandidate)> = None;
    for (j, column) in data.columns.iter().enumerate() {
        if let Some(cand) =
            best_split_with_margin(column, targets, rows, hp.min_data_in_leaf, margin)
        {
            if best
                .as_ref()
                .is_none_or(|(_, b)| cand.gain > b.gain + margin)
            {
                best = Some((j, cand));
            }
        }
    }
    best
}

/// Grow one tree leaf-wise on the residuals. Returns the tree plus the
/// (row, leaf value) assignment used to update the boosting predictions on
/// the exact training partition.
pub(crate) fn grow_tree(
    data: &Dataset,
    residuals: &[f64],
    hp: &GbtHyperParams,
) -> (TreeNode, Vec<(usize, f64)>) {
    // Arena of leaves in creation order; creation order breaks gain ties.
    let all_rows: Vec<usize> = (0..data.n_rows).collect();
    let mut root_stats = Stats::default();
    for &r in &all_rows {
        root_stats.add(residuals[r]);
    }
    let margin = gain_margin(root_stats.sse());
    let root_candidate = scan_leaf(data, residuals, &all_rows, 0, hp, margin);
    let mut leaves = vec![LeafState {
        rows: all_rows,
        depth: 0,
        candidate: root_candidate,
    }];
    // Tree structure over leaf arena ids.
    enum Shape {
        Leaf(usize),
        Split {
            feature: usize,
            threshold: f64,
            missing_left: bool,
            left: Box<Shape>,
            right: Box<Shape>,
        },
    }
    let mut shape = Shape::Leaf(0);
    let mut n_leaves = 1;

    while n_leaves < hp.num_leaves {
        let mut chosen: Option<(usize, usize, SplitCandidate)> = None;
        for (id, leaf) in leaves.iter().enumerate() {
            if let Some((feature, cand)) = leaf.candidate {
                if chosen
                    .as_ref()
                    .is_none_or(|(_, _, best)| cand.gain > best.gain + margin)
                {
                    chosen = Some((id, feature, cand));
                }
            }
        }
        let Some((leaf_id, feature, cand)) = chosen else {
            break;
        };

        let parent_rows = std::mem::take(&mut leaves[leaf_id].rows);
        let depth = leaves[leaf_id].depth;
        let column = &data.columns[feature];
        let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
        for &r in &parent_rows {
            let go_left = match column[r] {
                Some(v) => v <= cand.threshold,
                None => cand.missing_goes_left,
            };
            if go_left {
                left_rows.push(r);
            } else {
                right_rows.push(r);
            }
        }

        let left_id = leaves.len();
        leaves.push(LeafState {
            candidate: scan_leaf(data, residuals, &left_rows, depth + 1, hp, margin),
            rows: left_rows,
            depth: depth + 1,
        });
        let right_id = leaves.len();
        leaves.push(LeafState {
            candidate: scan_leaf(data, residuals, &right_rows, depth + 1, hp, margin),
            rows: right_rows,
            depth: depth + 1,
        });
        leaves[leaf_id].candidate = None;

        fn attach(
            shape: Shape,
            target: usize,
            feature: usize,
            threshold: f64,
            missing_left: bool,
            left_id: usize,
            right_id: usize,
        ) -> Shape {
            match shape {
                Shape::Leaf(id) if id == target => Shape::Split {
                    feature,
                    threshold,
                    missing_left,
                    left: Box::new(Shape::Leaf(left_id)),
                    right: Box::new(Shape::Leaf(right_id)),
                },
                Shape::Leaf(id) => Shape::Leaf(id),
                Shape::Split {
                    feature: f,
                    threshold: t,
                    missing_left: m,
                    left,
                    right,
                } => Shape::Split {
                    feature: f,
                    threshold: t,
                    missing_left: m,
                    left: Box::new(attach(
                        *left,
                        target,
                        feature,
                        threshold,
                        missing_left,
                        left_id,
                        right_id,
                    )),
                    right: Box::new(attach(
                        *right,
                        target,
                        feature,
                        threshold,
                        missing_left,
                        left_id,
                        right_id,
                    )),
                },
            }
        }
        shape = attach(
            shape,
            leaf_id,
            feature,
            cand.threshold,
            cand.missing_goes_left,
            left_id,
            right_id,
        );
        n_leaves += 1;
    }

    // Materialize leaf values and the row assignment.
    let mut assignment = Vec::with_capacity(data.n_rows);
    fn build(
        shape: &Shape,
        leaves: &[LeafState],
        residuals: &[f64],
        names: &[String],
        assignment: &mut Vec<(usize, f64)>,
    ) -> TreeNode {
        match shape {
            Shape::Leaf(id) => {
                let rows = &leaves[*id].rows;
                let mut stats = Stats::default();
                for &r in rows {
                    stats.add(residuals[r]);
                }
                let value = stats.mean();
                for &r in rows {
                    assignment.push((r, value));
                }
                TreeNode::Leaf {
                    value,
                    count: rows.len(),
                }
            }
            Shape::Split {
                feature,
                threshold,
                missing_left,
                left,
                right,
            } => TreeNode::Split {
                feature_index: *feature,
                feature_name: names[*feature].clone(),
                threshold: *threshold,
                missing_goes_left: *missing_left,
                left: Box::new(build(left, leaves, residuals, names, assignment)),
                right: Box::new(build(right, leaves, residuals, names, assignment)),
            },
        }
    }
    let root = build(
        &shape,
        &leaves,
        residuals,
        &data.feature_names,
        &mut assignment,
    );
    (root, assignment)
}

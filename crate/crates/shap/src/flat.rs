//! Arena form of a tree with background occupancy counts per node.

use stockcast_core::FeatureVector;
use stockcast_gbt::TreeNode;

use crate::ShapError;

pub(crate) struct FlatNode {
    pub feature: usize,
    pub threshold: f64,
    pub missing_goes_left: bool,
    pub left: usize,
    pub right: usize,
    pub leaf_value: f64,
    pub is_leaf: bool,
}

pub(crate) struct FlatTree {
    pub nodes: Vec<FlatNode>,
    /// Background rows reaching each node.
    pub cover: Vec<f64>,
}

impl FlatTree {
    pub fn build(
        root: &TreeNode,
        background: &[FeatureVector],
        tree_idx: usize,
    ) -> Result<Self, ShapError> {
        let mut nodes = Vec::new();
        flatten(root, &mut nodes);
        let mut cover = vec![0.0; nodes.len()];
        for row in background {
            let mut at = 0;
            loop {
                cover[at] += 1.0;
                let node = &nodes[at];
                if node.is_leaf {
                    break;
                }
                let go_left = match row.value_at(node.feature) {
                    Some(v) => v <= node.threshold,
                    None => node.missing_goes_left,
                };
                at = if go_left { node.left } else { node.right };
            }
        }
        if let Some(node) = cover.iter().position(|c| *c == 0.0) {
            return Err(ShapError::UncoveredNode {
                tree: tree_idx,
                node,
            });
        }
        Ok(Self { nodes, cover })
    }

    /// Cover-weighted expectation of the tree output over the background.
    pub fn expected_value(&self) -> f64 {
        let total = self.cover[0];
        self.nodes
            .iter()
            .zip(&self.cover)
            .filter(|(n, _)| n.is_leaf)
            .map(|(n, c)| n.leaf_value * c / total)
            .sum()
    }
}

fn flatten(node: &TreeNode, out: &mut Vec<FlatNode>) -> usize {
    let id = out.len();
    match node {
        TreeNode::Leaf { value, .. } => {
            out.push(FlatNode {
                feature: usize::MAX,
                threshold: 0.0,
                missing_goes_left: true,
                left: usize::MAX,
                right: usize::MAX,
                leaf_value: *value,
                is_leaf: true,
            });
            id
        }
        TreeNode::Split {
            feature_index,
            threshold,
            missing_goes_left,
            left,
            right,
            ..
        } => {
            out.push(FlatNode {
                feature: *feature_index,
                threshold: *threshold,
                missing_goes_left: *missing_goes_left,
                left: 0,
                right: 0,
                leaf_value: 0.0,
                is_leaf: false,
            });
            let left_id = flatten(left, out);
            let right_id = flatten(right, out);
            out[id].left = left_id;
            out[id].right = right_id;
            id
        }
    }
}

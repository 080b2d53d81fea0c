//! CART-style regression tree, the black-box model of the benchmark.
//!
//! Training greedily partitions the data by axis-aligned splits, choosing at
//! each node the split that most reduces the within-node sum of squared
//! deviations of the target. The split search is exhaustive: every midpoint
//! between consecutive distinct values of every feature is a candidate.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spiral::Dataset;
use crate::Predictor;

/// Hard cap on tree depth, protecting recursion and the nested JSON format.
/// Effective depth never comes close on realistic data.
const DEPTH_CAP: usize = 100;

/// A node of the fitted tree. Serializes to nested JSON objects with fields
/// `feature`/`threshold`/`left`/`right` for internal nodes and
/// `value`/`count` for leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        /// Mean of the training targets routed to this leaf.
        value: f64,
        count: usize,
    },
}

/// Tree growth limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Maximum number of splits on any root-to-leaf path; `None` grows until
    /// the sample-count limits stop it (capped internally at 100 levels).
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    /// Defaults tuned for the spiral benchmark: the large split threshold
    /// coarsens the bulk (held-out MSE lands in the reference band), while
    /// the small leaf size still lets the tree carve thin slivers of
    /// low-density fringe points off dense regions, which keeps its
    /// predictions clean near the data boundary.
    fn default() -> Self {
        TreeParams {
            max_depth: Some(14),
            min_samples_leaf: 5,
            min_samples_split: 200,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidConfig("min_samples_leaf must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidConfig(
                "min_samples_split must be >= 2".into(),
            ));
        }
        Ok(())
    }

    fn depth_limit(&self) -> usize {
        self.max_depth.unwrap_or(DEPTH_CAP).min(DEPTH_CAP)
    }
}

/// A fitted regression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    root: TreeNode,
    feature_dim: usize,
}

impl RegressionTree {
    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Number of leaves.
    pub fn n_leaves(&self) -> usize {
        fn walk(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Internal { left, right, .. } => walk(left) + walk(right),
            }
        }
        walk(&self.root)
    }

    /// Depth of the deepest leaf (0 for a single-leaf tree).
    pub fn depth(&self) -> usize {
        fn walk(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }

    /// Predict by routing `x` down the split thresholds (`<=` goes left).
    ///
    /// `x` must carry every feature the tree splits on; for fitted trees that
    /// is the training feature dimension, for loaded trees it is inferred
    /// from the split indices.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() < self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                got: x.len(),
            });
        }
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return Ok(*value),
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict_batch(&self, xs: &[[f64; 2]]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

impl Predictor for RegressionTree {
    fn n_features(&self) -> usize {
        self.feature_dim
    }

    fn predict(&self, x: &[f64]) -> f64 {
        RegressionTree::predict(self, x).expect("feature vector length checked by caller")
    }
}

/// Fit a tree to the dataset by greedy recursive partitioning.
///
/// Split ties (equal error reduction) resolve to the lowest feature index and
/// then the smallest threshold, so training is deterministic.
pub fn fit_tree(train: &Dataset, params: &TreeParams) -> Result<RegressionTree> {
    params.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let xs = train.feature_rows();
    let ys = train.targets();
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    let builder = Builder {
        xs: &xs,
        ys: &ys,
        params,
    };
    let root = builder.build(&mut idx, 0);
    Ok(RegressionTree {
        root,
        feature_dim: train.feature_dim(),
    })
}

struct Builder<'a> {
    xs: &'a [[f64; 2]],
    ys: &'a [f64],
    params: &'a TreeParams,
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Builder<'_> {
    fn build(&self, idx: &mut [usize], depth: usize) -> TreeNode {
        let n = idx.len();
        let sum: f64 = idx.iter().map(|&i| self.ys[i]).sum();
        let mean = sum / n as f64;
        let leaf = TreeNode::Leaf {
            value: mean,
            count: n,
        };

        if depth >= self.params.depth_limit()
            || n < self.params.min_samples_split
            || n < 2 * self.params.min_samples_leaf
        {
            return leaf;
        }
        // Exactly constant targets never split; this also avoids phantom
        // gains from floating-point cancellation in the SSE scan.
        let y_min = idx.iter().map(|&i| self.ys[i]).fold(f64::INFINITY, f64::min);
        let y_max = idx
            .iter()
            .map(|&i| self.ys[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if y_min == y_max {
            return leaf;
        }

        let Some(split) = self.best_split(idx) else {
            return leaf;
        };

        let (mut left, mut right): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.xs[i][split.feature] <= split.threshold);
        debug_assert!(left.len() >= self.params.min_samples_leaf);
        debug_assert!(right.len() >= self.params.min_samples_leaf);
        TreeNode::Internal {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.build(&mut left, depth + 1)),
            right: Box::new(self.build(&mut right, depth + 1)),
        }
    }

    /// Scan every feature and every midpoint between consecutive distinct
    /// sorted values; return the split with the strictly largest reduction in
    /// summed squared deviations.
    fn best_split(&self, idx: &[usize]) -> Option<Split> {
        let n = idx.len();
        let min_leaf = self.params.min_samples_leaf;
        let total_sum: f64 = idx.iter().map(|&i| self.ys[i]).sum();
        let total_sumsq: f64 = idx.iter().map(|&i| self.ys[i] * self.ys[i]).sum();
        let sse_total = (total_sumsq - total_sum * total_sum / n as f64).max(0.0);

        let mut best: Option<Split> = None;
        let mut column: Vec<(f64, f64)> = Vec::with_capacity(n);
        for feature in 0..2 {
            column.clear();
            column.extend(idx.iter().map(|&i| (self.xs[i][feature], self.ys[i])));
            column.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));

            let mut sum_left = 0.0;
            let mut sumsq_left = 0.0;
            for k in 1..n {
                let (prev_v, prev_y) = column[k - 1];
                sum_left += prev_y;
                sumsq_left += prev_y * prev_y;
                let v = column[k].0;
                if prev_v >= v {
                    continue;
                }
                if k < min_leaf || n - k < min_leaf {
                    continue;
                }
                let threshold = 0.5 * (prev_v + v);
                // Guard against the midpoint rounding up onto the right
                // value, which would contradict the left/right counts.
                if threshold >= v {
                    continue;
                }
                let kf = k as f64;
                let nf = (n - k) as f64;
                let sum_right = total_sum - sum_left;
                let sumsq_right = total_sumsq - sumsq_left;
                let sse_left = (sumsq_left - sum_left * sum_left / kf).max(0.0);
                let sse_right = (sumsq_right - sum_right * sum_right / nf).max(0.0);
                let gain = sse_total - sse_left - sse_right;
                if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Split {
                        feature,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }
}

/// Write the tree as nested JSON (the file is the root node).
pub fn save_tree(tree: &RegressionTree, path: &Path) -> Result<()> {
    let json = serde_json::to_string(&tree.root)?;
    fs::write(path, json)?;
    Ok(())
}

/// Load a tree saved by [`save_tree`]. The feature dimension is inferred
/// from the largest split index.
pub fn load_tree(path: &Path) -> Result<RegressionTree> {
    let text = fs::read_to_string(path)?;
    let root: TreeNode = serde_json::from_str(&text)
        .map_err(|e| Error::Schema(format!("invalid tree JSON: {e}")))?;
    fn max_feature(node: &TreeNode) -> usize {
        match node {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal {
                feature,
                left,
                right,
                ..
            } => (feature + 1).max(max_feature(left)).max(max_feature(right)),
        }
    }
    let feature_dim = max_feature(&root);
    Ok(RegressionTree { root, feature_dim })
}

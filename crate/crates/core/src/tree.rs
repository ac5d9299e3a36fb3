//! Binary threshold trees, ensembles and prediction.
//!
//! Trees are stored as a node arena in preorder with the root at index 0, so
//! a node's id doubles as its preorder rank. Routing convention everywhere:
//! `x[feature] <= threshold` goes left (the "true" branch).

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }
}

/// Link from a node to its parent: parent id and whether the node is the
/// parent's left (test true) child.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParentLink {
    pub parent: usize,
    pub is_left: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    parents: Vec<Option<ParentLink>>,
    n_features: usize,
}

impl DecisionTree {
    /// Single-leaf tree.
    pub fn leaf(value: f64, n_features: usize) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
            parents: vec![None],
            n_features,
        }
    }

    /// Validates an arbitrary node arena rooted at `root` and renumbers it
    /// into preorder.
    pub fn from_nodes(nodes: &[Node], root: usize, n_features: usize) -> Result<Self> {
        if root >= nodes.len() {
            return Err(Error::InvalidModel(format!("root {root} out of range")));
        }
        let mut new_id = vec![usize::MAX; nodes.len()];
        let mut order = Vec::with_capacity(nodes.len());
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if new_id[id] != usize::MAX {
                return Err(Error::InvalidModel(format!(
                    "cycle detected: node {id} is reached more than once"
                )));
            }
            new_id[id] = order.len();
            order.push(id);
            if let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = nodes[id]
            {
                if feature >= n_features {
                    return Err(Error::InvalidModel(format!(
                        "node {id} tests feature {feature} but the model has {n_features} features"
                    )));
                }
                if !threshold.is_finite() {
                    return Err(Error::InvalidModel(format!("node {id} has a non-finite threshold")));
                }
                for child in [left, right] {
                    if child >= nodes.len() {
                        return Err(Error::InvalidModel(format!(
                            "node {id} references missing child {child}"
                        )));
                    }
                }
                stack.push(right);
                stack.push(left);
            }
        }
        if order.len() != nodes.len() {
            let orphans: Vec<usize> = (0..nodes.len()).filter(|&i| new_id[i] == usize::MAX).collect();
            return Err(Error::InvalidModel(format!("orphan nodes not reachable from root: {orphans:?}")));
        }
        let mut out = Vec::with_capacity(nodes.len());
        for &old in &order {
            out.push(match nodes[old] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => Node::Split {
                    feature,
                    threshold,
                    left: new_id[left],
                    right: new_id[right],
                },
                leaf => leaf,
            });
        }
        Ok(Self::from_preorder(out, n_features))
    }

    fn from_preorder(nodes: Vec<Node>, n_features: usize) -> Self {
        let mut parents = vec![None; nodes.len()];
        for (id, node) in nodes.iter().enumerate() {
            if let Node::Split { left, right, .. } = *node {
                parents[left] = Some(ParentLink { parent: id, is_left: true });
                parents[right] = Some(ParentLink { parent: id, is_left: false });
            }
        }
        Self {
            nodes,
            parents,
            n_features,
        }
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn parent(&self, id: usize) -> Option<ParentLink> {
        self.parents[id]
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Split node ids in preorder.
    pub fn split_ids(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| !self.nodes[i].is_leaf()).collect()
    }

    /// Leaf ids in preorder.
    pub fn leaf_ids(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf()).collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.len() - self.n_leaves()
    }

    /// Ancestors of `id` from the root down, each with the branch taken.
    pub fn path_to(&self, id: usize) -> Vec<ParentLink> {
        let mut path = Vec::new();
        let mut cur = id;
        while let Some(link) = self.parents[cur] {
            path.push(link);
            cur = link.parent;
        }
        path.reverse();
        path
    }

    pub fn depth(&self, id: usize) -> usize {
        let mut d = 0;
        let mut cur = id;
        while let Some(link) = self.parents[cur] {
            d += 1;
            cur = link.parent;
        }
        d
    }

    /// Id of the leaf a row is routed to. The row must have the right width.
    #[inline]
    pub fn leaf_for(&self, row: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if row[feature] <= threshold { left } else { right },
                Node::Leaf { .. } => return id,
            }
        }
    }

    pub fn leaf_value(&self, id: usize) -> Option<f64> {
        match self.nodes[id] {
            Node::Leaf { value } => Some(value),
            Node::Split { .. } => None,
        }
    }

    /// Copy of the tree with every leaf value replaced by `f(leaf_id)`.
    pub fn map_leaf_values(&self, mut f: impl FnMut(usize) -> f64) -> Self {
        let mut out = self.clone();
        for (id, node) in out.nodes.iter_mut().enumerate() {
            if let Node::Leaf { value } = node {
                *value = f(id);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Mean,
    WeightedSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    RandomForest,
    GradientBoosted,
    #[default]
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    trees: Vec<DecisionTree>,
    weights: Vec<f64>,
    base_score: f64,
    aggregation: Aggregation,
    kind: EnsembleKind,
}

impl TreeEnsemble {
    pub fn new(
        trees: Vec<DecisionTree>,
        weights: Vec<f64>,
        base_score: f64,
        aggregation: Aggregation,
        kind: EnsembleKind,
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidModel("ensemble has no trees".into()));
        }
        if weights.len() != trees.len() {
            return Err(Error::InvalidModel(format!(
                "{} weights for {} trees",
                weights.len(),
                trees.len()
            )));
        }
        if aggregation == Aggregation::Mean && weights.iter().any(|&w| w != weights[0]) {
            return Err(Error::InvalidModel("mean aggregation requires equal weights".into()));
        }
        let d = trees[0].n_features();
        if trees.iter().any(|t| t.n_features() != d) {
            return Err(Error::InvalidModel("trees disagree on feature dimension".into()));
        }
        if !base_score.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidModel("non-finite weight or base score".into()));
        }
        Ok(Self {
            trees,
            weights,
            base_score,
            aggregation,
            kind,
        })
    }

    /// Equal-weight averaging ensemble with zero base score.
    pub fn mean_of(trees: Vec<DecisionTree>, kind: EnsembleKind) -> Result<Self> {
        let n = trees.len();
        Self::new(trees, vec![1.0; n], 0.0, Aggregation::Mean, kind)
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn base_score(&self) -> f64 {
        self.base_score
    }

    pub fn aggregation(&self) -> Aggregation {
        self.aggregation
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Ensemble restricted to its first `n` members (same weights and base).
    pub fn truncated(&self, n: usize) -> Result<Self> {
        let n = n.min(self.trees.len());
        Self::new(
            self.trees[..n].to_vec(),
            self.weights[..n].to_vec(),
            self.base_score,
            self.aggregation,
            self.kind,
        )
    }
}

/// Anything that maps a feature row to a real prediction.
pub trait Predict: Sync {
    fn n_features(&self) -> usize;

    /// Prediction for a row already known to have `n_features` entries.
    fn predict_unchecked(&self, row: &[f64]) -> f64;

    fn predict(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: row.len(),
            });
        }
        Ok(self.predict_unchecked(row))
    }

    fn predict_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.n_cols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: data.n_cols(),
            });
        }
        Ok(data.rows().map(|r| self.predict_unchecked(r)).collect())
    }
}

impl Predict for DecisionTree {
    fn n_features(&self) -> usize {
        self.n_features
    }

    #[inline]
    fn predict_unchecked(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_for(row)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!("leaf_for always returns a leaf"),
        }
    }
}

impl Predict for TreeEnsemble {
    fn n_features(&self) -> usize {
        self.trees[0].n_features()
    }

    fn predict_unchecked(&self, row: &[f64]) -> f64 {
        match self.aggregation {
            Aggregation::Mean => {
                let sum: f64 = self.trees.iter().map(|t| t.predict_unchecked(row)).sum();
                self.base_score + sum / self.trees.len() as f64
            }
            Aggregation::WeightedSum => {
                self.base_score
                    + self
                        .trees
                        .iter()
                        .zip(&self.weights)
                        .map(|(t, w)| w * t.predict_unchecked(row))
                        .sum::<f64>()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Tree(DecisionTree),
    Ensemble(TreeEnsemble),
}

impl Predict for Model {
    fn n_features(&self) -> usize {
        match self {
            Model::Tree(t) => t.n_features(),
            Model::Ensemble(e) => e.n_features(),
        }
    }

    fn predict_unchecked(&self, row: &[f64]) -> f64 {
        match self {
            Model::Tree(t) => t.predict_unchecked(row),
            Model::Ensemble(e) => e.predict_unchecked(row),
        }
    }
}

impl From<DecisionTree> for Model {
    fn from(t: DecisionTree) -> Self {
        Model::Tree(t)
    }
}

impl From<TreeEnsemble> for Model {
    fn from(e: TreeEnsemble) -> Self {
        Model::Ensemble(e)
    }
}

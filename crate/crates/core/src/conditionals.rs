//! Subgroup conditional probabilities at split nodes and per-leaf statistics.
//!
//! A split node at depth k defines the conditional "test true given the k
//! ancestor tests on the path". Its probability under P or Q is the fraction
//! of rows reaching the node that take the left branch.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::tree::{DecisionTree, Node};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub feature: usize,
    pub threshold: f64,
    /// `true` when the path takes the `x <= threshold` branch.
    pub branch: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitConditional {
    pub node_id: usize,
    pub path: Vec<PathStep>,
    pub feature: usize,
    pub threshold: f64,
    pub label: String,
}

impl SplitConditional {
    /// Whether a row belongs to the ancestor subgroup (reaches this node).
    #[inline]
    pub fn reaches(&self, row: &[f64]) -> bool {
        self.path
            .iter()
            .all(|s| (row[s.feature] <= s.threshold) == s.branch)
    }

    /// Whether a row satisfies this node's own test.
    #[inline]
    pub fn test(&self, row: &[f64]) -> bool {
        row[self.feature] <= self.threshold
    }

    pub fn depth(&self) -> usize {
        self.path.len()
    }
}

fn feature_name(names: Option<&[String]>, j: usize) -> String {
    names
        .and_then(|n| n.get(j).cloned())
        .unwrap_or_else(|| format!("x{j}"))
}

fn render_label(names: Option<&[String]>, path: &[PathStep], feature: usize, threshold: f64) -> String {
    let test = format!("{} ≤ {:?}", feature_name(names, feature), threshold);
    if path.is_empty() {
        return format!("P({test})");
    }
    let given: Vec<String> = path
        .iter()
        .map(|s| {
            let t = format!("{} ≤ {:?}", feature_name(names, s.feature), s.threshold);
            if s.branch {
                t
            } else {
                format!("{t} is false")
            }
        })
        .collect();
    format!("P({test} | {})", given.join(", "))
}

/// Topology of the explained tree in terms of conditional and leaf indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ShapeNode {
    Split { conditional: usize, left: usize, right: usize },
    Leaf { leaf: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub reached: usize,
    pub taken: usize,
}

/// Conditional probabilities of every split node under P and Q, in preorder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalTable {
    pub conditionals: Vec<SplitConditional>,
    pub p_probs: Vec<f64>,
    pub q_probs: Vec<f64>,
    pub p_counts: Option<Vec<Counts>>,
    pub q_counts: Option<Vec<Counts>>,
    /// Tree topology, preorder with the root first.
    pub shape: Vec<ShapeNode>,
    /// Tree node id of each leaf, in preorder.
    pub leaf_node_ids: Vec<usize>,
    /// For each leaf, its ancestors as (conditional index, branch) pairs.
    pub leaf_paths: Vec<Vec<(usize, bool)>>,
}

impl ConditionalTable {
    /// Table with given probabilities (no counts) for the tree's split nodes
    /// in preorder.
    pub fn from_probabilities(
        tree: &DecisionTree,
        names: Option<&[String]>,
        p_probs: Vec<f64>,
        q_probs: Vec<f64>,
    ) -> Result<Self> {
        let splits = tree.n_splits();
        if p_probs.len() != splits || q_probs.len() != splits {
            return Err(Error::DimensionMismatch {
                expected: splits,
                actual: p_probs.len().min(q_probs.len()),
            });
        }
        if p_probs.iter().chain(&q_probs).any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("conditional probabilities must lie in [0, 1]".into()));
        }
        let mut table = Self::skeleton(tree, names);
        table.p_probs = p_probs;
        table.q_probs = q_probs;
        Ok(table)
    }

    fn skeleton(tree: &DecisionTree, names: Option<&[String]>) -> Self {
        let mut cond_index = vec![usize::MAX; tree.nodes().len()];
        let mut leaf_index = vec![usize::MAX; tree.nodes().len()];
        let mut conditionals = Vec::new();
        let mut leaf_node_ids = Vec::new();
        for (id, node) in tree.nodes().iter().enumerate() {
            match *node {
                Node::Split { feature, threshold, .. } => {
                    let path: Vec<PathStep> = tree
                        .path_to(id)
                        .iter()
                        .map(|link| match *tree.node(link.parent) {
                            Node::Split { feature, threshold, .. } => PathStep {
                                feature,
                                threshold,
                                branch: link.is_left,
                            },
                            Node::Leaf { .. } => unreachable!("parents are splits"),
                        })
                        .collect();
                    cond_index[id] = conditionals.len();
                    conditionals.push(SplitConditional {
                        node_id: id,
                        label: render_label(names, &path, feature, threshold),
                        path,
                        feature,
                        threshold,
                    });
                }
                Node::Leaf { .. } => {
                    leaf_index[id] = leaf_node_ids.len();
                    leaf_node_ids.push(id);
                }
            }
        }
        let shape = tree
            .nodes()
            .iter()
            .enumerate()
            .map(|(id, node)| match *node {
                Node::Split { left, right, .. } => ShapeNode::Split {
                    conditional: cond_index[id],
                    left,
                    right,
                },
                Node::Leaf { .. } => ShapeNode::Leaf { leaf: leaf_index[id] },
            })
            .collect();
        let leaf_paths = leaf_node_ids
            .iter()
            .map(|&id| {
                tree.path_to(id)
                    .iter()
                    .map(|link| (cond_index[link.parent], link.is_left))
                    .collect()
            })
            .collect();
        let n = conditionals.len();
        Self {
            conditionals,
            p_probs: vec![0.0; n],
            q_probs: vec![0.0; n],
            p_counts: None,
            q_counts: None,
            shape,
            leaf_node_ids,
            leaf_paths,
        }
    }

    pub fn len(&self) -> usize {
        self.conditionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditionals.is_empty()
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_node_ids.len()
    }

    /// Leaf probability from the product of ancestor conditionals.
    pub fn leaf_prob(&self, leaf: usize, use_q: bool) -> f64 {
        let probs = if use_q { &self.q_probs } else { &self.p_probs };
        self.leaf_paths[leaf]
            .iter()
            .map(|&(c, branch)| if branch { probs[c] } else { 1.0 - probs[c] })
            .product()
    }
}

fn count_routes(tree: &DecisionTree, data: &Dataset, n_splits: usize, cond_of: &[usize]) -> Vec<Counts> {
    let mut counts = vec![Counts { reached: 0, taken: 0 }; n_splits];
    for row in data.rows() {
        let mut id = 0;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
        } = *tree.node(id)
        {
            let c = &mut counts[cond_of[id]];
            c.reached += 1;
            if row[feature] <= threshold {
                c.taken += 1;
                id = left;
            } else {
                id = right;
            }
        }
    }
    counts
}

/// Empirical conditional probabilities of every split node under P and Q.
///
/// Fails with [`Error::UndefinedConditional`] on the first split node (in
/// preorder) that no row of P or Q reaches.
pub fn extract_conditionals(tree: &DecisionTree, data_p: &Dataset, data_q: &Dataset) -> Result<ConditionalTable> {
    for data in [data_p, data_q] {
        if data.n_cols() != tree.n_features() {
            return Err(Error::DimensionMismatch {
                expected: tree.n_features(),
                actual: data.n_cols(),
            });
        }
    }
    let mut table = ConditionalTable::skeleton(tree, Some(data_p.column_names()));
    let mut cond_of = vec![usize::MAX; tree.nodes().len()];
    for (i, c) in table.conditionals.iter().enumerate() {
        cond_of[c.node_id] = i;
    }
    let n = table.len();
    let pc = count_routes(tree, data_p, n, &cond_of);
    let qc = count_routes(tree, data_q, n, &cond_of);
    for i in 0..n {
        for (counts, distribution) in [(&pc, "P"), (&qc, "Q")] {
            if counts[i].reached == 0 {
                return Err(Error::UndefinedConditional {
                    node_id: table.conditionals[i].node_id,
                    distribution,
                });
            }
        }
    }
    table.p_probs = pc.iter().map(|c| c.taken as f64 / c.reached as f64).collect();
    table.q_probs = qc.iter().map(|c| c.taken as f64 / c.reached as f64).collect();
    table.p_counts = Some(pc);
    table.q_counts = Some(qc);
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillPolicy {
    /// Borrow the mean from the other distribution; fall back to the tree's
    /// own leaf value when both are empty.
    #[default]
    OtherDistribution,
    /// Always use the tree's own leaf value.
    LeafValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafFill {
    None,
    PFilled,
    QFilled,
    BothFilled,
}

/// Leaf probabilities and mean target-model predictions under P and Q,
/// leaves in preorder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafStats {
    pub p_prob: Vec<f64>,
    pub q_prob: Vec<f64>,
    pub p_mean: Vec<f64>,
    pub q_mean: Vec<f64>,
    pub p_count: Vec<usize>,
    pub q_count: Vec<usize>,
    pub fill: Vec<LeafFill>,
}

impl LeafStats {
    /// Self-explanation stats: both means equal the tree's leaf value.
    pub fn from_leaf_values(values: &[f64]) -> Self {
        let n = values.len();
        Self {
            p_prob: vec![f64::NAN; n],
            q_prob: vec![f64::NAN; n],
            p_mean: values.to_vec(),
            q_mean: values.to_vec(),
            p_count: vec![0; n],
            q_count: vec![0; n],
            fill: vec![LeafFill::None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.p_mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_mean.is_empty()
    }

    pub fn any_filled(&self) -> bool {
        self.fill.iter().any(|f| *f != LeafFill::None)
    }
}

/// Per-leaf empirical probability and mean prediction of a target model
/// (which need not be the tree) under P and Q.
pub fn compute_leaf_stats(
    tree: &DecisionTree,
    predict_p: &[f64],
    predict_q: &[f64],
    data_p: &Dataset,
    data_q: &Dataset,
    policy: FillPolicy,
) -> Result<LeafStats> {
    for (data, pred) in [(data_p, predict_p), (data_q, predict_q)] {
        if data.n_cols() != tree.n_features() {
            return Err(Error::DimensionMismatch {
                expected: tree.n_features(),
                actual: data.n_cols(),
            });
        }
        if pred.len() != data.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: data.n_rows(),
                actual: pred.len(),
            });
        }
    }
    let leaves = tree.leaf_ids();
    let mut slot = vec![usize::MAX; tree.nodes().len()];
    for (i, &id) in leaves.iter().enumerate() {
        slot[id] = i;
    }
    let tally = |data: &Dataset, pred: &[f64]| {
        let mut count = vec![0usize; leaves.len()];
        let mut sum = vec![0.0f64; leaves.len()];
        for (row, &f) in data.rows().zip(pred) {
            let l = slot[tree.leaf_for(row)];
            count[l] += 1;
            sum[l] += f;
        }
        (count, sum)
    };
    let (pc, ps) = tally(data_p, predict_p);
    let (qc, qs) = tally(data_q, predict_q);
    let (np, nq) = (data_p.n_rows() as f64, data_q.n_rows() as f64);

    let mut stats = LeafStats {
        p_prob: pc.iter().map(|&c| c as f64 / np).collect(),
        q_prob: qc.iter().map(|&c| c as f64 / nq).collect(),
        p_mean: vec![0.0; leaves.len()],
        q_mean: vec![0.0; leaves.len()],
        p_count: pc.clone(),
        q_count: qc.clone(),
        fill: vec![LeafFill::None; leaves.len()],
    };
    for (i, &id) in leaves.iter().enumerate() {
        let own = tree.leaf_value(id).unwrap_or(0.0);
        let pm = (pc[i] > 0).then(|| ps[i] / pc[i] as f64);
        let qm = (qc[i] > 0).then(|| qs[i] / qc[i] as f64);
        let (p, q, fill) = match (pm, qm, policy) {
            (Some(p), Some(q), _) => (p, q, LeafFill::None),
            (None, None, _) => (own, own, LeafFill::BothFilled),
            (None, Some(q), FillPolicy::OtherDistribution) => (q, q, LeafFill::PFilled),
            (Some(p), None, FillPolicy::OtherDistribution) => (p, p, LeafFill::QFilled),
            (None, Some(q), FillPolicy::LeafValue) => (own, q, LeafFill::PFilled),
            (Some(p), None, FillPolicy::LeafValue) => (p, own, LeafFill::QFilled),
        };
        stats.p_mean[i] = p;
        stats.q_mean[i] = q;
        stats.fill[i] = fill;
    }
    Ok(stats)
}

//! Surrogate trees for black-box targets: growth under the shift impurity or
//! a baseline, pruning a large tree back to a small prefix, and a Monte-Carlo
//! check of the midpoint approximation behind the shift impurity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::conditionals::ConditionalTable;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learn::{grow, member_rng, GrowParams, ImpurityKind, Sample};
use crate::shapley::interventional_leaf_prob;
use crate::tree::{DecisionTree, Node};

/// Per-leaf counts and prediction sums under P and Q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftImpurityInputs {
    pub n_p_leaf: usize,
    pub n_q_leaf: usize,
    pub n_p_total: usize,
    pub n_q_total: usize,
    pub sum_p: f64,
    pub sum_q: f64,
}

/// `(|P_l|/|P| + |Q_l|/|Q|) * |mean_P - mean_Q|`, or `+inf` when the leaf
/// holds no rows from one of the distributions.
pub fn shift_impurity(inputs: ShiftImpurityInputs) -> f64 {
    let ShiftImpurityInputs {
        n_p_leaf,
        n_q_leaf,
        n_p_total,
        n_q_total,
        sum_p,
        sum_q,
    } = inputs;
    if n_p_leaf == 0 || n_q_leaf == 0 || n_p_total == 0 || n_q_total == 0 {
        return f64::INFINITY;
    }
    let mass = n_p_leaf as f64 / n_p_total as f64 + n_q_leaf as f64 / n_q_total as f64;
    mass * (sum_p / n_p_leaf as f64 - sum_q / n_q_leaf as f64).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateConfig {
    pub max_leaves: usize,
    pub impurity: ImpurityKind,
    /// Rows required from each distribution on each side of every split.
    pub min_per_distribution: usize,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            max_leaves: 8,
            impurity: ImpurityKind::Shift,
            min_per_distribution: 5,
        }
    }
}

fn check_predictions(data: &Dataset, pred: &[f64], name: &str) -> Result<()> {
    if data.n_rows() == 0 {
        return Err(Error::Empty(format!("dataset {name} has no rows")));
    }
    if pred.len() != data.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: data.n_rows(),
            actual: pred.len(),
        });
    }
    if pred.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("predictions for {name} must be finite")));
    }
    Ok(())
}

/// Best-first surrogate growth on `P ∪ Q` with the target's predictions as
/// labels. Gini binarises predictions at 0.5. Leaf values are the mean
/// prediction over the rows of both datasets in the leaf.
pub fn grow_surrogate(
    data_p: &Dataset,
    data_q: &Dataset,
    pred_p: &[f64],
    pred_q: &[f64],
    config: &SurrogateConfig,
) -> Result<DecisionTree> {
    check_predictions(data_p, pred_p, "P")?;
    check_predictions(data_q, pred_q, "Q")?;
    if data_p.n_cols() != data_q.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: data_p.n_cols(),
            actual: data_q.n_cols(),
        });
    }
    if config.max_leaves == 0 {
        return Err(Error::Config("max_leaves must be positive".into()));
    }
    let samples: Vec<Sample> = [pred_p, pred_q]
        .iter()
        .enumerate()
        .flat_map(|(g, pred)| {
            pred.iter().enumerate().map(move |(i, &t)| Sample {
                group: g as u8,
                row: i as u32,
                target: t,
            })
        })
        .collect();
    let params = GrowParams {
        impurity: config.impurity,
        max_leaves: config.max_leaves,
        min_per_side: 1,
        min_per_group_side: config.min_per_distribution.max(1),
        feature_subsample: 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    Ok(grow(&[data_p, data_q], samples, &params, &mut rng))
}

/// A pruned prefix of a larger tree. `original_ids[i]` is the id in the
/// source tree of node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedTree {
    pub tree: DecisionTree,
    pub original_ids: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default)]
struct NodeTally {
    n: [usize; 2],
    sum: [f64; 2],
}

fn tally_nodes(tree: &DecisionTree, data: [&Dataset; 2], pred: [&[f64]; 2]) -> Vec<NodeTally> {
    let mut out = vec![NodeTally::default(); tree.nodes().len()];
    for g in 0..2 {
        for (row, &f) in data[g].rows().zip(pred[g]) {
            let mut id = tree.root();
            loop {
                out[id].n[g] += 1;
                out[id].sum[g] += f;
                match *tree.node(id) {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => id = if row[feature] <= threshold { left } else { right },
                    Node::Leaf { .. } => break,
                }
            }
        }
    }
    out
}

/// Regrows `large` from the root, each step reinstating the children of the
/// frontier node with the highest shift impurity (ties to the lowest id),
/// until `target_leaves` leaves. Nodes missing rows from either dataset are
/// never expanded, so growth can stop early. Leaf values are the mean
/// prediction over both datasets' rows in the leaf.
pub fn prune_regrow(
    large: &DecisionTree,
    data_p: &Dataset,
    data_q: &Dataset,
    pred_p: &[f64],
    pred_q: &[f64],
    target_leaves: usize,
) -> Result<PrunedTree> {
    if target_leaves < 2 {
        return Err(Error::Config("target_leaves must be at least 2".into()));
    }
    if target_leaves > large.n_leaves() {
        return Err(Error::Config(format!(
            "target_leaves {target_leaves} exceeds the tree's {} leaves",
            large.n_leaves()
        )));
    }
    check_predictions(data_p, pred_p, "P")?;
    check_predictions(data_q, pred_q, "Q")?;
    for d in [data_p, data_q] {
        if d.n_cols() != large.n_features() {
            return Err(Error::DimensionMismatch {
                expected: large.n_features(),
                actual: d.n_cols(),
            });
        }
    }
    let tally = tally_nodes(large, [data_p, data_q], [pred_p, pred_q]);
    let (np, nq) = (data_p.n_rows(), data_q.n_rows());
    let impurity = |id: usize| {
        let t = &tally[id];
        shift_impurity(ShiftImpurityInputs {
            n_p_leaf: t.n[0],
            n_q_leaf: t.n[1],
            n_p_total: np,
            n_q_total: nq,
            sum_p: t.sum[0],
            sum_q: t.sum[1],
        })
    };

    let mut expanded = vec![false; large.nodes().len()];
    let mut frontier = vec![large.root()];
    while frontier.len() < target_leaves {
        let pick = frontier
            .iter()
            .enumerate()
            .filter(|&(_, &id)| !large.node(id).is_leaf() && tally[id].n[0] > 0 && tally[id].n[1] > 0)
            .map(|(i, &id)| (i, id, impurity(id)))
            .fold(None, |acc: Option<(usize, usize, f64)>, c| match acc {
                Some(a) if a.2 > c.2 || (a.2 == c.2 && a.1 < c.1) => Some(a),
                _ => Some(c),
            });
        let Some((i, id, _)) = pick else { break };
        frontier.swap_remove(i);
        expanded[id] = true;
        if let Node::Split { left, right, .. } = *large.node(id) {
            frontier.push(left);
            frontier.push(right);
        }
    }

    // kept nodes in original preorder; a connected prefix keeps its order
    let kept: Vec<usize> = (0..large.nodes().len())
        .filter(|&id| expanded[id] || large.parent(id).is_some_and(|p| expanded[p.parent]) || id == large.root())
        .collect();
    let mut new_id = vec![usize::MAX; large.nodes().len()];
    for (i, &id) in kept.iter().enumerate() {
        new_id[id] = i;
    }
    let arena: Vec<Node> = kept
        .iter()
        .map(|&id| match *large.node(id) {
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } if expanded[id] => Node::Split {
                feature,
                threshold,
                left: new_id[left],
                right: new_id[right],
            },
            _ => {
                let t = &tally[id];
                let n = t.n[0] + t.n[1];
                let value = if n > 0 {
                    (t.sum[0] + t.sum[1]) / n as f64
                } else {
                    large.leaf_value(id).unwrap_or(0.0)
                };
                Node::Leaf { value }
            }
        })
        .collect();
    let tree = DecisionTree::from_nodes(&arena, 0, large.n_features())?;
    Ok(PrunedTree {
        tree,
        original_ids: kept,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxyConfig {
    pub depth: usize,
    pub n_repeats: usize,
    pub seed: u64,
    /// 0 samples P and Q independently, 1 makes them equal.
    pub correlation: f64,
}

impl Default for ProxyConfig {
    fn default() -> Self {
        Self {
            depth: 3,
            n_repeats: 5000,
            seed: 0,
            correlation: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProxySummary {
    pub n_differences: usize,
    pub mean_diff: f64,
    pub std_diff: f64,
    pub frac_within_0_05: f64,
    pub frac_within_0_1: f64,
}

fn complete_tree(depth: usize) -> Result<DecisionTree> {
    let mut nodes = Vec::new();
    fn build(nodes: &mut Vec<Node>, level: usize, depth: usize) -> usize {
        let id = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        if level < depth {
            let left = build(nodes, level + 1, depth);
            let right = build(nodes, level + 1, depth);
            nodes[id] = Node::Split {
                feature: level,
                threshold: 0.0,
                left,
                right,
            };
        }
        id
    }
    build(&mut nodes, 0, depth);
    DecisionTree::from_nodes(&nodes, 0, depth)
}

/// Shapley-weighted average interventional probability of every leaf, with
/// LeafMeans counted as an extra player that never joins.
#[cfg(test)]
pub(crate) fn weighted_leaf_probs(table: &ConditionalTable) -> Vec<f64> {
    weighted_leaf_excess(table, &vec![0.0; table.n_leaves()])
}

/// `sum_S w(S) (Z_S(l) - base[l])` for every leaf.
fn weighted_leaf_excess(table: &ConditionalTable, base: &[f64]) -> Vec<f64> {
    let n = table.len();
    let players = n + 1;
    // s! (players - s - 1)! / players!
    let weights: Vec<f64> = {
        let mut binom = 1.0f64;
        (0..players)
            .map(|s| {
                let w = 1.0 / (players as f64 * binom);
                binom = binom * (players - 1 - s) as f64 / (s + 1) as f64;
                w
            })
            .collect()
    };
    let mut out = vec![0.0; table.n_leaves()];
    let mut in_s = vec![false; n];
    for mask in 0usize..(1 << n) {
        for (c, slot) in in_s.iter_mut().enumerate() {
            *slot = mask >> c & 1 == 1;
        }
        let w = weights[mask.count_ones() as usize];
        for (l, o) in out.iter_mut().enumerate() {
            *o += w * (interventional_leaf_prob(table, &in_s, l) - base[l]);
        }
    }
    out
}

/// Differences `sum_S w(S) Z_S(l) - (P(l) + Q(l)) / 2` over every leaf of a
/// complete tree, for random conditional tables.
pub fn proxy_differences(config: &ProxyConfig) -> Result<Vec<f64>> {
    if config.depth == 0 || config.depth > 4 {
        return Err(Error::Config("proxy simulation depth must be in 1..=4".into()));
    }
    if !(0.0..=1.0).contains(&config.correlation) {
        return Err(Error::Config("correlation must be in [0, 1]".into()));
    }
    let tree = complete_tree(config.depth)?;
    let n = tree.n_splits();
    let rho = config.correlation;
    let per_repeat: Vec<Vec<f64>> = (0..config.n_repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = member_rng(config.seed, r);
            let p: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let q: Vec<f64> = p.iter().map(|&pc| (1.0 - rho) * rng.random::<f64>() + rho * pc).collect();
            let table = ConditionalTable::from_probabilities(&tree, None, p, q)?;
            let leaves = 0..table.n_leaves();
            let pl: Vec<f64> = leaves.clone().map(|l| table.leaf_prob(l, false)).collect();
            // centred on P(l) so that P = Q gives exactly zero
            let excess = weighted_leaf_excess(&table, &pl);
            Ok(leaves
                .map(|l| excess[l] - (table.leaf_prob(l, true) - pl[l]) / 2.0)
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_repeat.into_iter().flatten().collect())
}

pub fn proxy_simulation(config: &ProxyConfig) -> Result<ProxySummary> {
    let d = proxy_differences(config)?;
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let within = |m: f64| d.iter().filter(|x| x.abs() <= m).count() as f64 / n;
    Ok(ProxySummary {
        n_differences: d.len(),
        mean_diff: mean,
        std_diff: var.sqrt(),
        frac_within_0_05: within(0.05),
        frac_within_0_1: within(0.1),
    })
}

//! Shapley attribution of a mean-prediction shift to subgroup conditionals.
//!
//! The players are the split-node conditionals of one tree, optionally plus a
//! single `LeafMeans` player that swaps every leafwise mean prediction from
//! its P value to its Q value. A coalition S yields the interventional mean
//! `sum_l Z_S(l) * v_l`, where `Z_S(l)` multiplies Q conditionals for members
//! of S and P conditionals otherwise along the path to leaf `l`.

mod exact;
mod joint;
mod kernel;
mod oracle;

pub use exact::{exact_shapley, exact_shapley_with_limit, shapley_from_values, ShiftGame, DEFAULT_EXACT_LIMIT};
pub use joint::joint_sv_diagnostic;
pub use kernel::{kernel_shap, kernel_shap_game, KernelConfig};
pub use oracle::brute_force_oracle;

use serde::{Deserialize, Serialize};

use crate::conditionals::{ConditionalTable, LeafStats, SplitConditional};
use crate::error::{Error, Result};
use crate::tree::DecisionTree;

/// Guard below which a prediction shift counts as zero.
pub const SHIFT_EPSILON: f64 = 1e-12;

/// Leafwise values entering the interventional mean: the P-side values are
/// used unless the LeafMeans player is in the coalition.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafValues {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl LeafValues {
    /// Self-explanation of a tree: both sides are the tree's own leaf values.
    pub fn from_tree(tree: &DecisionTree) -> Self {
        let v: Vec<f64> = tree
            .leaf_ids()
            .into_iter()
            .filter_map(|id| tree.leaf_value(id))
            .collect();
        Self { p: v.clone(), q: v }
    }

    pub fn from_stats(stats: &LeafStats) -> Self {
        Self {
            p: stats.p_mean.clone(),
            q: stats.q_mean.clone(),
        }
    }

    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Self {
        Self { p, q }
    }

    fn check(&self, table: &ConditionalTable) -> Result<()> {
        if self.p.len() != table.n_leaves() || self.q.len() != table.n_leaves() {
            return Err(Error::DimensionMismatch {
                expected: table.n_leaves(),
                actual: self.p.len().min(self.q.len()),
            });
        }
        Ok(())
    }
}

/// Probability of `leaf` when the conditionals flagged in `in_s` take their Q
/// values and all others their P values. Entries of `in_s` beyond the
/// conditional count are ignored.
pub fn interventional_leaf_prob(table: &ConditionalTable, in_s: &[bool], leaf: usize) -> f64 {
    let mut z = 1.0;
    for &(cond, branch) in &table.leaf_paths[leaf] {
        let pr = if in_s.get(cond).copied().unwrap_or(false) {
            table.q_probs[cond]
        } else {
            table.p_probs[cond]
        };
        z *= if branch { pr } else { 1.0 - pr };
    }
    z
}

/// Interventional mean for coalition `in_s`: the first `|C|` flags select
/// conditionals, an optional extra flag selects the LeafMeans player.
pub fn interventional_mean(table: &ConditionalTable, values: &LeafValues, in_s: &[bool]) -> Result<f64> {
    values.check(table)?;
    let n = table.len();
    if in_s.len() != n && in_s.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: in_s.len(),
        });
    }
    let swap_means = in_s.get(n).copied().unwrap_or(false);
    let v = if swap_means { &values.q } else { &values.p };
    Ok((0..table.n_leaves())
        .map(|l| interventional_leaf_prob(table, in_s, l) * v[l])
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    KernelShap,
    BruteForce,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorAttribution {
    pub conditional: SplitConditional,
    pub p_prob: f64,
    pub q_prob: f64,
    pub sv: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Metadata {
    pub tree_index: Option<usize>,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub n_rows_p: Option<usize>,
    pub n_rows_q: Option<usize>,
    /// Mean target prediction over the raw P rows, when known.
    pub empirical_mu_p: Option<f64>,
    pub empirical_mu_q: Option<f64>,
    pub flags: Vec<String>,
}

/// Result of one attribution run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Explanation {
    pub factors: Vec<FactorAttribution>,
    pub leafmeans_sv: Option<f64>,
    /// Interventional mean of the empty coalition.
    pub mu_p: f64,
    /// Interventional mean of the grand coalition.
    pub mu_q: f64,
    pub percent_unexplained: Option<f64>,
    pub method: Method,
    pub metadata: Metadata,
}

impl Explanation {
    pub(crate) fn assemble(
        table: &ConditionalTable,
        svs: Vec<f64>,
        include_leafmeans: bool,
        mu_p: f64,
        mu_q: f64,
        method: Method,
    ) -> Self {
        let n = table.len();
        let leafmeans_sv = include_leafmeans.then(|| svs[n]);
        let factors = table
            .conditionals
            .iter()
            .enumerate()
            .map(|(i, c)| FactorAttribution {
                conditional: c.clone(),
                p_prob: table.p_probs[i],
                q_prob: table.q_probs[i],
                sv: svs[i],
            })
            .collect();
        let mut out = Self {
            factors,
            leafmeans_sv,
            mu_p,
            mu_q,
            percent_unexplained: None,
            method,
            metadata: Metadata::default(),
        };
        if include_leafmeans {
            out.percent_unexplained = percent_unexplained(&out).ok().flatten();
            if out.percent_unexplained.is_none() {
                out.metadata.flags.push("percent_unexplained_undefined".into());
            }
        }
        out
    }

    pub fn shift(&self) -> f64 {
        self.mu_q - self.mu_p
    }

    pub fn factor_svs(&self) -> Vec<f64> {
        self.factors.iter().map(|f| f.sv).collect()
    }

    /// Sum of every attribution, LeafMeans included.
    pub fn total_sv(&self) -> f64 {
        self.factors.iter().map(|f| f.sv).sum::<f64>() + self.leafmeans_sv.unwrap_or(0.0)
    }

    /// Factor indices ordered by decreasing |SV| (ties by index).
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.factors.len()).collect();
        idx.sort_by(|&a, &b| {
            self.factors[b]
                .sv
                .abs()
                .total_cmp(&self.factors[a].sv.abs())
                .then(a.cmp(&b))
        });
        idx
    }
}

/// `100 * |phi_LeafMeans| / |shift|`, or `None` when the shift is below
/// [`SHIFT_EPSILON`].
pub fn percent_unexplained_value(leafmeans_sv: f64, shift: f64) -> Option<f64> {
    (shift.abs() >= SHIFT_EPSILON).then(|| 100.0 * leafmeans_sv.abs() / shift.abs())
}

/// PercentUnexplained of an explanation computed with the LeafMeans player.
pub fn percent_unexplained(expl: &Explanation) -> Result<Option<f64>> {
    let lm = expl.leafmeans_sv.ok_or(Error::MissingLeafMeans)?;
    Ok(percent_unexplained_value(lm, expl.shift()))
}

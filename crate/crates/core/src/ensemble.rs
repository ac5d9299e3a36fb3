//! Per-tree shift explanations of a whole ensemble, and selection of the tree
//! whose conditionals explain the most of the ensemble's shift.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditionals::{compute_leaf_stats, extract_conditionals, FillPolicy};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::shapley::{exact_shapley_with_limit, kernel_shap, Explanation, KernelConfig, LeafValues, DEFAULT_EXACT_LIMIT};
use crate::tree::{DecisionTree, Predict, TreeEnsemble};

/// How SVs are computed for a single tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SvMethod {
    Exact { limit: usize },
    Kernel(KernelConfig),
}

impl Default for SvMethod {
    fn default() -> Self {
        SvMethod::Exact {
            limit: DEFAULT_EXACT_LIMIT,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExplainOptions {
    pub method: SvMethod,
    pub fill: FillPolicy,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Explains the shift of a target model, given by its predictions on both
/// datasets, through `tree`'s conditionals plus the LeafMeans factor.
pub fn explain_tree(
    tree: &DecisionTree,
    target_p: &[f64],
    target_q: &[f64],
    data_p: &Dataset,
    data_q: &Dataset,
    options: &ExplainOptions,
) -> Result<Explanation> {
    let table = extract_conditionals(tree, data_p, data_q)?;
    let stats = compute_leaf_stats(tree, target_p, target_q, data_p, data_q, options.fill)?;
    let values = LeafValues::from_stats(&stats);
    let mut expl = match options.method {
        SvMethod::Exact { limit } => exact_shapley_with_limit(&table, &values, true, limit)?,
        SvMethod::Kernel(cfg) => kernel_shap(&table, &values, true, cfg)?,
    };
    let md = &mut expl.metadata;
    md.n_rows_p = Some(data_p.n_rows());
    md.n_rows_q = Some(data_q.n_rows());
    md.empirical_mu_p = mean(target_p);
    md.empirical_mu_q = mean(target_q);
    if stats.any_filled() {
        md.flags.push("leaf_means_filled".into());
    }
    Ok(expl)
}

/// Explains the ensemble's shift through the conditionals of one member tree.
pub fn explain_tree_in_ensemble(
    ensemble: &TreeEnsemble,
    tree_index: usize,
    data_p: &Dataset,
    data_q: &Dataset,
) -> Result<Explanation> {
    let tree = ensemble.trees().get(tree_index).ok_or_else(|| {
        Error::Config(format!("tree index {tree_index} out of range for {} trees", ensemble.len()))
    })?;
    let pred_p = ensemble.predict_dataset(data_p)?;
    let pred_q = ensemble.predict_dataset(data_q)?;
    let mut e = explain_tree(tree, &pred_p, &pred_q, data_p, data_q, &ExplainOptions::default())?;
    e.metadata.tree_index = Some(tree_index);
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    /// Only scan the first `max_trees` members.
    pub max_trees: Option<usize>,
    pub parallel: bool,
    pub options: ExplainOptions,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            max_trees: None,
            parallel: true,
            options: ExplainOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TreeScan {
    Explained {
        tree_index: usize,
        percent_unexplained: Option<f64>,
        leafmeans_sv: f64,
    },
    Failed {
        tree_index: usize,
        reason: String,
    },
}

impl TreeScan {
    pub fn tree_index(&self) -> usize {
        match self {
            TreeScan::Explained { tree_index, .. } | TreeScan::Failed { tree_index, .. } => *tree_index,
        }
    }

    pub fn percent_unexplained(&self) -> Option<f64> {
        match self {
            TreeScan::Explained {
                percent_unexplained, ..
            } => *percent_unexplained,
            TreeScan::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleExplanation {
    pub best: Explanation,
    pub scan: Vec<TreeScan>,
}

/// Explains every member tree (or the first `max_trees`) against the full
/// ensemble output and keeps the one with the smallest PercentUnexplained.
/// Trees with an undefined conditional are recorded as failed.
pub fn explain_ensemble(
    ensemble: &TreeEnsemble,
    data_p: &Dataset,
    data_q: &Dataset,
    config: &EnsembleConfig,
) -> Result<EnsembleExplanation> {
    if ensemble.is_empty() {
        return Err(Error::Empty("ensemble has no trees".into()));
    }
    let pred_p = ensemble.predict_dataset(data_p)?;
    let pred_q = ensemble.predict_dataset(data_q)?;
    let n = config.max_trees.map_or(ensemble.len(), |m| m.min(ensemble.len()));

    let run = |i: usize| -> Result<std::result::Result<Explanation, String>> {
        match explain_tree(&ensemble.trees()[i], &pred_p, &pred_q, data_p, data_q, &config.options) {
            Ok(mut e) => {
                e.metadata.tree_index = Some(i);
                Ok(Ok(e))
            }
            Err(err @ (Error::UndefinedConditional { .. } | Error::TooManyFactors { .. })) => Ok(Err(err.to_string())),
            Err(err) => Err(err),
        }
    };
    let results: Vec<_> = if config.parallel {
        (0..n).into_par_iter().map(run).collect::<Result<_>>()?
    } else {
        (0..n).map(run).collect::<Result<_>>()?
    };

    let scan: Vec<TreeScan> = results
        .iter()
        .enumerate()
        .map(|(i, r)| match r {
            Ok(e) => TreeScan::Explained {
                tree_index: i,
                percent_unexplained: e.percent_unexplained,
                leafmeans_sv: e.leafmeans_sv.unwrap_or(0.0),
            },
            Err(reason) => TreeScan::Failed {
                tree_index: i,
                reason: reason.clone(),
            },
        })
        .collect();

    // defined PercentUnexplained first, then the smallest value; the
    // undefined case (zero shift) falls back to |LeafMeans SV|
    let key = |e: &Explanation| match e.percent_unexplained {
        Some(pu) => (0u8, pu),
        None => (1u8, e.leafmeans_sv.unwrap_or(0.0).abs()),
    };
    let best = results
        .into_iter()
        .filter_map(|r| r.ok())
        .reduce(|a, b| if key(&b) < key(&a) { b } else { a })
        .ok_or_else(|| Error::AllTreesFailed(format!("all {n} scanned trees failed")))?;
    Ok(EnsembleExplanation { best, scan })
}

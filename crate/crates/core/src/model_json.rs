//! JSON interchange for trees and ensembles.
//!
//! ```json
//! {"kind": "ensemble", "feature_names": ["a", "b"],
//!  "trees": [{"nodes": [{"id": 0, "feature": 1, "threshold": 0.5, "left": 1, "right": 2}],
//!             "leaves": [{"id": 1, "value": 0.1}, {"id": 2, "value": 0.9}],
//!             "root": 0}],
//!  "weights": [1.0], "base_score": 0.0, "aggregation": "mean"}
//! ```
//!
//! Node ids in a file may be arbitrary distinct integers; they are renumbered
//! into preorder on import. Reals are written with shortest round-trip
//! formatting.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{Aggregation, DecisionTree, EnsembleKind, Model, Node, TreeEnsemble};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum DocKind {
    Tree,
    Ensemble,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitDoc {
    id: u64,
    feature: usize,
    threshold: f64,
    left: u64,
    right: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeafDoc {
    id: u64,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    nodes: Vec<SplitDoc>,
    leaves: Vec<LeafDoc>,
    root: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    kind: DocKind,
    feature_names: Vec<String>,
    trees: Vec<TreeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    aggregation: Option<Aggregation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ensemble_kind: Option<EnsembleKind>,
}

/// A model together with the column names it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub feature_names: Vec<String>,
    pub model: Model,
}

impl ModelDocument {
    pub fn new(feature_names: Vec<String>, model: impl Into<Model>) -> Self {
        Self {
            feature_names,
            model: model.into(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        let d = doc.feature_names.len();
        let trees = doc
            .trees
            .iter()
            .enumerate()
            .map(|(i, t)| {
                tree_from_doc(t, d).map_err(|e| Error::InvalidModel(format!("tree {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let model = match doc.kind {
            DocKind::Tree => {
                if trees.len() != 1 {
                    return Err(Error::InvalidModel(format!(
                        "kind `tree` needs exactly one tree, found {}",
                        trees.len()
                    )));
                }
                Model::Tree(trees.into_iter().next().unwrap_or_else(|| unreachable!()))
            }
            DocKind::Ensemble => {
                let n = trees.len();
                let aggregation = doc.aggregation.unwrap_or(Aggregation::WeightedSum);
                Model::Ensemble(TreeEnsemble::new(
                    trees,
                    doc.weights.unwrap_or_else(|| vec![1.0; n]),
                    doc.base_score.unwrap_or(0.0),
                    aggregation,
                    doc.ensemble_kind.unwrap_or_default(),
                )?)
            }
        };
        Ok(Self {
            feature_names: doc.feature_names,
            model,
        })
    }

    pub fn to_json_string(&self) -> Result<String> {
        let doc = match &self.model {
            Model::Tree(t) => ModelDoc {
                kind: DocKind::Tree,
                feature_names: self.feature_names.clone(),
                trees: vec![tree_to_doc(t)],
                weights: None,
                base_score: None,
                aggregation: None,
                ensemble_kind: None,
            },
            Model::Ensemble(e) => ModelDoc {
                kind: DocKind::Ensemble,
                feature_names: self.feature_names.clone(),
                trees: e.trees().iter().map(tree_to_doc).collect(),
                weights: Some(e.weights().to_vec()),
                base_score: Some(e.base_score()),
                aggregation: Some(e.aggregation()),
                ensemble_kind: Some(e.kind()),
            },
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

pub fn import_json(path: impl AsRef<Path>) -> Result<ModelDocument> {
    ModelDocument::from_json_str(&std::fs::read_to_string(path)?)
}

pub fn export_json(doc: &ModelDocument, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, doc.to_json_string()?)?;
    Ok(())
}

fn tree_from_doc(doc: &TreeDoc, n_features: usize) -> Result<DecisionTree> {
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut dupes = BTreeSet::new();
    let ids = doc.nodes.iter().map(|n| n.id).chain(doc.leaves.iter().map(|l| l.id));
    for (i, id) in ids.enumerate() {
        if index.insert(id, i).is_some() {
            dupes.insert(id);
        }
    }
    if !dupes.is_empty() {
        return Err(Error::InvalidModel(format!("duplicate node ids {dupes:?}")));
    }
    let lookup = |id: u64, from: u64| {
        index
            .get(&id)
            .copied()
            .ok_or_else(|| Error::InvalidModel(format!("node {from} references unknown node {id}")))
    };
    let mut arena = Vec::with_capacity(index.len());
    for n in &doc.nodes {
        arena.push(Node::Split {
            feature: n.feature,
            threshold: n.threshold,
            left: lookup(n.left, n.id)?,
            right: lookup(n.right, n.id)?,
        });
    }
    for l in &doc.leaves {
        arena.push(Node::Leaf { value: l.value });
    }
    let root = lookup(doc.root, doc.root)?;
    // report problems using the file's ids rather than arena positions
    let file_ids: Vec<u64> = doc.nodes.iter().map(|n| n.id).chain(doc.leaves.iter().map(|l| l.id)).collect();
    DecisionTree::from_nodes(&arena, root, n_features).map_err(|e| match e {
        Error::InvalidModel(msg) => Error::InvalidModel(translate_ids(&msg, &file_ids)),
        other => other,
    })
}

fn translate_ids(msg: &str, file_ids: &[u64]) -> String {
    if let Some(start) = msg.find('[') {
        if let Some(end) = msg[start..].find(']') {
            let ids: Vec<String> = msg[start + 1..start + end]
                .split(',')
                .filter_map(|s| s.trim().parse::<usize>().ok())
                .map(|i| file_ids.get(i).map_or(i.to_string(), |id| id.to_string()))
                .collect();
            return format!("{}[{}]{}", &msg[..start], ids.join(", "), &msg[start + end + 1..]);
        }
    }
    msg.to_owned()
}

fn tree_to_doc(tree: &DecisionTree) -> TreeDoc {
    let mut nodes = Vec::new();
    let mut leaves = Vec::new();
    for (id, node) in tree.nodes().iter().enumerate() {
        match *node {
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => nodes.push(SplitDoc {
                id: id as u64,
                feature,
                threshold,
                left: left as u64,
                right: right as u64,
            }),
            Node::Leaf { value } => leaves.push(LeafDoc { id: id as u64, value }),
        }
    }
    TreeDoc {
        nodes,
        leaves,
        root: tree.root() as u64,
    }
}

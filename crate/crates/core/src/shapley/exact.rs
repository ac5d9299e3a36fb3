use rayon::prelude::*;

use super::{Explanation, LeafValues, Method};
use crate::conditionals::{ConditionalTable, ShapeNode};
use crate::error::{Error, Result};

/// Largest player count enumerated exactly by default (about a million
/// coalitions).
pub const DEFAULT_EXACT_LIMIT: usize = 20;

/// The prediction-shift game over one tree's conditionals (plus LeafMeans).
#[derive(Debug, Clone, Copy)]
pub struct ShiftGame<'a> {
    table: &'a ConditionalTable,
    values: &'a LeafValues,
    include_leafmeans: bool,
}

impl<'a> ShiftGame<'a> {
    pub fn new(table: &'a ConditionalTable, values: &'a LeafValues, include_leafmeans: bool) -> Result<Self> {
        values.check(table)?;
        Ok(Self {
            table,
            values,
            include_leafmeans,
        })
    }

    pub fn n_players(&self) -> usize {
        self.table.len() + usize::from(self.include_leafmeans)
    }

    /// Interventional mean of a coalition, evaluated bottom-up over the tree
    /// so each node is visited once. `scratch` must hold one slot per node.
    pub fn value_with(&self, member: impl Fn(usize) -> bool, scratch: &mut [f64]) -> f64 {
        let t = self.table;
        let n = t.len();
        let leaf_values = if self.include_leafmeans && member(n) {
            &self.values.q
        } else {
            &self.values.p
        };
        for id in (0..t.shape.len()).rev() {
            scratch[id] = match t.shape[id] {
                ShapeNode::Leaf { leaf } => leaf_values[leaf],
                ShapeNode::Split {
                    conditional,
                    left,
                    right,
                } => {
                    let pr = if member(conditional) {
                        t.q_probs[conditional]
                    } else {
                        t.p_probs[conditional]
                    };
                    pr * scratch[left] + (1.0 - pr) * scratch[right]
                }
            };
        }
        scratch[0]
    }

    pub fn value(&self, member: impl Fn(usize) -> bool) -> f64 {
        let mut scratch = vec![0.0; self.table.shape.len()];
        self.value_with(member, &mut scratch)
    }

    /// Values of all `2^n` coalitions indexed by bitmask.
    pub fn all_values(&self) -> Vec<f64> {
        let n = self.n_players();
        let total = 1usize << n;
        let chunk = 1usize << n.min(12);
        (0..total)
            .into_par_iter()
            .step_by(chunk)
            .flat_map_iter(|start| {
                let mut scratch = vec![0.0; self.table.shape.len()];
                (start..(start + chunk).min(total))
                    .map(|mask| self.value_with(|c| mask >> c & 1 == 1, &mut scratch))
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

/// Shapley weight `s! (n-s-1)! / n!` for every coalition size `s < n`.
pub(crate) fn shapley_weights(n: usize) -> Vec<f64> {
    // 1 / (n * C(n-1, s)); binomials are exact in f64 for the sizes we enumerate
    let mut binom = 1.0f64;
    let mut out = Vec::with_capacity(n);
    for s in 0..n {
        out.push(1.0 / (n as f64 * binom));
        binom = binom * (n - 1 - s) as f64 / (s + 1) as f64;
    }
    out
}

/// Shapley values from a complete table of coalition values indexed by
/// bitmask. Each player's sum runs over masks in ascending order.
pub fn shapley_from_values(n: usize, values: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), 1usize << n, "need one value per coalition");
    let w = shapley_weights(n);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let bit = 1usize << i;
            let mut acc = 0.0;
            for mask in 0..values.len() {
                if mask & bit == 0 {
                    let d = values[mask | bit] - values[mask];
                    if d != 0.0 {
                        acc += w[mask.count_ones() as usize] * d;
                    }
                }
            }
            acc
        })
        .collect()
}

/// Exact Shapley values by enumerating every coalition, with the default
/// player limit.
pub fn exact_shapley(table: &ConditionalTable, values: &LeafValues, include_leafmeans: bool) -> Result<Explanation> {
    exact_shapley_with_limit(table, values, include_leafmeans, DEFAULT_EXACT_LIMIT)
}

pub fn exact_shapley_with_limit(
    table: &ConditionalTable,
    values: &LeafValues,
    include_leafmeans: bool,
    limit: usize,
) -> Result<Explanation> {
    let game = ShiftGame::new(table, values, include_leafmeans)?;
    let n = game.n_players();
    if n > limit || n >= usize::BITS as usize - 1 {
        return Err(Error::TooManyFactors { factors: n, limit });
    }
    let all = game.all_values();
    let svs = shapley_from_values(n, &all);
    Ok(Explanation::assemble(
        table,
        svs,
        include_leafmeans,
        all[0],
        all[all.len() - 1],
        Method::Exact,
    ))
}

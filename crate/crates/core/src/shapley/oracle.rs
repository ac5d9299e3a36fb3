//! Reference implementation for equivalence testing: a literal double loop
//! over factors and coalitions with per-leaf products, sharing nothing with
//! the bottom-up evaluation in `exact`.

use super::{Explanation, LeafValues, Method};
use crate::conditionals::{ConditionalTable, ShapeNode};
use crate::error::{Error, Result};

const ORACLE_LIMIT: usize = 12;

/// For each leaf, for each conditional: `None` if the leaf lies outside the
/// conditional's node, else `Some(true)` when the leaf sits under the test's
/// true branch.
fn membership(table: &ConditionalTable) -> Vec<Vec<Option<bool>>> {
    let n = table.len();
    let mut out = vec![vec![None; n]; table.n_leaves()];
    // (node, ancestors-so-far)
    let mut stack: Vec<(usize, Vec<(usize, bool)>)> = vec![(0, Vec::new())];
    while let Some((node, anc)) = stack.pop() {
        match table.shape[node] {
            ShapeNode::Leaf { leaf } => {
                for (c, b) in anc {
                    out[leaf][c] = Some(b);
                }
            }
            ShapeNode::Split {
                conditional,
                left,
                right,
            } => {
                let mut l = anc.clone();
                l.push((conditional, true));
                let mut r = anc;
                r.push((conditional, false));
                stack.push((left, l));
                stack.push((right, r));
            }
        }
    }
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub fn brute_force_oracle(table: &ConditionalTable, values: &LeafValues, include_leafmeans: bool) -> Result<Explanation> {
    values.check(table)?;
    let n_cond = table.len();
    let n = n_cond + usize::from(include_leafmeans);
    if n > ORACLE_LIMIT {
        return Err(Error::TooManyFactors {
            factors: n,
            limit: ORACLE_LIMIT,
        });
    }
    let member = membership(table);

    let mean_of = |s: &[bool]| -> f64 {
        let swapped = include_leafmeans && s[n_cond];
        let mut total = 0.0;
        for (l, row) in member.iter().enumerate() {
            let mut z = 1.0;
            for c in 0..n_cond {
                if let Some(in_true) = row[c] {
                    let pr = if s[c] { table.q_probs[c] } else { table.p_probs[c] };
                    z *= if in_true { pr } else { 1.0 - pr };
                }
            }
            total += z * if swapped { values.q[l] } else { values.p[l] };
        }
        total
    };

    let mut svs = vec![0.0; n];
    for (c, sv) in svs.iter_mut().enumerate() {
        let others: Vec<usize> = (0..n).filter(|&j| j != c).collect();
        for bits in 0..(1usize << others.len()) {
            let mut s = vec![false; n];
            let mut size = 0;
            for (k, &j) in others.iter().enumerate() {
                if bits >> k & 1 == 1 {
                    s[j] = true;
                    size += 1;
                }
            }
            let w = factorial(size) * factorial(n - size - 1) / factorial(n);
            let without = mean_of(&s);
            s[c] = true;
            let with = mean_of(&s);
            *sv += w * (with - without);
        }
    }
    let mu_p = mean_of(&vec![false; n]);
    let mu_q = mean_of(&vec![true; n]);
    Ok(Explanation::assemble(table, svs, include_leafmeans, mu_p, mu_q, Method::BruteForce))
}

//! Shapley values over joint leaf probabilities, for contrast with the
//! conditional decomposition. Swapping a subset of leaves to their Q
//! probabilities forces a renormalisation of the others; here the rest are
//! scaled by a common factor so the total stays 1.

use super::exact::shapley_from_values;
use crate::error::{Error, Result};

const JOINT_LIMIT: usize = 20;

fn check_distribution(name: &str, probs: &[f64]) -> Result<()> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Config(format!("{name} leaf probabilities must be finite and non-negative")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("{name} leaf probabilities sum to {total}, expected 1")));
    }
    Ok(())
}

/// Per-leaf SVs for the leaf-probability swap game with uniform
/// renormalisation. The SVs sum to `mu_Q - mu_P`.
pub fn joint_sv_diagnostic(p_leaf: &[f64], q_leaf: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    let n = p_leaf.len();
    if q_leaf.len() != n || values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: if q_leaf.len() != n { q_leaf.len() } else { values.len() },
        });
    }
    if n == 0 {
        return Err(Error::Empty("no leaves".into()));
    }
    if n > JOINT_LIMIT {
        return Err(Error::TooManyFactors {
            factors: n,
            limit: JOINT_LIMIT,
        });
    }
    check_distribution("P", p_leaf)?;
    check_distribution("Q", q_leaf)?;

    let mut game = Vec::with_capacity(1 << n);
    for mask in 0usize..(1 << n) {
        let swapped = |l: usize| mask >> l & 1 == 1;
        let (mut q_in, mut p_out) = (0.0, 0.0);
        for l in 0..n {
            if swapped(l) {
                q_in += q_leaf[l];
            } else {
                p_out += p_leaf[l];
            }
        }
        let need = 1.0 - q_in;
        let alpha = if p_out > 0.0 {
            need / p_out
        } else if need.abs() <= 1e-12 {
            1.0
        } else {
            return Err(Error::Renormalisation(format!(
                "leaves outside swap set {mask:#b} carry no P mass but need {need}"
            )));
        };
        let mean: f64 = (0..n)
            .map(|l| values[l] * if swapped(l) { q_leaf[l] } else { alpha * p_leaf[l] })
            .sum();
        game.push(mean);
    }
    Ok(shapley_from_values(n, &game))
}

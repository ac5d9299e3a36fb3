//! Kernel SHAP: Shapley values as the solution of a weighted least-squares
//! fit over coalitions, weighted by the Shapley kernel
//! `pi(S) = (n-1) / (C(n,|S|) |S| (n-|S|))`, with the empty and grand
//! coalitions imposed as equality constraints.
//!
//! Coalition sizes are processed in complementary pairs `(s, n-s)` from the
//! outside in. A size pair whose share of the remaining budget covers every
//! subset is enumerated with exact kernel weights; the rest of the budget is
//! split across the remaining sizes in proportion to kernel mass and filled
//! with distinct random subsets, each drawn together with its complement.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::exact::ShiftGame;
use super::{Explanation, LeafValues, Method};
use crate::conditionals::ConditionalTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelConfig {
    /// Number of coalition evaluations; `None` means `2n + 2048`.
    pub budget: Option<usize>,
    pub seed: u64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { budget: None, seed: 0 }
    }
}

pub(crate) fn default_budget(n: usize) -> usize {
    2 * n + 2048
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Kernel weight of a single coalition of size `s`.
fn kernel_weight(n: usize, s: usize) -> f64 {
    (n - 1) as f64 / (binomial(n, s) * s as f64 * (n - s) as f64)
}

struct Coalitions {
    members: Vec<Vec<bool>>,
    weights: Vec<f64>,
}

impl Coalitions {
    fn push(&mut self, members: Vec<bool>, weight: f64) {
        self.members.push(members);
        self.weights.push(weight);
    }
}

fn complement(s: &[bool]) -> Vec<bool> {
    s.iter().map(|b| !b).collect()
}

/// Calls `f` for every size-`k` subset of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn build_coalitions(n: usize, budget: usize, rng: &mut ChaCha8Rng) -> Coalitions {
    let mut out = Coalitions {
        members: Vec::new(),
        weights: Vec::new(),
    };
    let proper = if n < 63 { (1u64 << n) - 2 } else { u64::MAX };
    if (budget as u64) >= proper {
        for mask in 1..=proper {
            let s: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let size = mask.count_ones() as usize;
            out.push(s, kernel_weight(n, size));
        }
        return out;
    }

    let to_set = |idx: &[usize]| {
        let mut s = vec![false; n];
        for &i in idx {
            s[i] = true;
        }
        s
    };
    // (size, paired, subset count, kernel mass)
    let pairs: Vec<(usize, bool, f64, f64)> = (1..=n / 2)
        .map(|s| {
            let paired = s != n - s;
            let mult = if paired { 2.0 } else { 1.0 };
            let mass = mult * (n - 1) as f64 / (s * (n - s)) as f64;
            (s, paired, mult * binomial(n, s), mass)
        })
        .collect();
    let mut remaining_mass: f64 = pairs.iter().map(|p| p.3).sum();
    let mut left = budget as f64;
    let mut next = 0;
    while next < pairs.len() {
        let (s, paired, count, mass) = pairs[next];
        if count > left * mass / remaining_mass {
            break;
        }
        let w = kernel_weight(n, s);
        for_each_combination(n, s, |idx| {
            let set = to_set(idx);
            if paired {
                out.push(complement(&set), w);
            }
            out.push(set, w);
        });
        left -= count;
        remaining_mass -= mass;
        next += 1;
    }

    // stratified sampling over the sizes that could not be enumerated
    let rest = &pairs[next..];
    for (k, &(s, paired, count, mass)) in rest.iter().enumerate() {
        let share = left * mass / remaining_mass;
        let draws_per_subset = if paired { 2.0 } else { 1.0 };
        let distinct = (count / draws_per_subset) as usize;
        let mut draws = ((share / draws_per_subset).round() as usize).max(1);
        if k == rest.len() - 1 {
            draws = ((left / draws_per_subset).floor() as usize).max(1);
        }
        draws = draws.min(distinct);
        left -= draws as f64 * draws_per_subset;
        remaining_mass -= mass;
        let mut seen: HashSet<Vec<bool>> = HashSet::with_capacity(draws);
        let mut picked = Vec::with_capacity(draws);
        while picked.len() < draws {
            let set = to_set(&sample_indices(rng, n, s).into_vec());
            // a size-n/2 subset and its complement are the same stratum
            if !paired && seen.contains(&complement(&set)) {
                continue;
            }
            if seen.insert(set.clone()) {
                picked.push(set);
            }
        }
        let w = mass / (draws as f64 * draws_per_subset);
        for set in picked {
            if paired {
                out.push(complement(&set), w);
            }
            out.push(set, w);
        }
        if left < 1.0 {
            break;
        }
    }
    out
}

/// Kernel SHAP for an arbitrary cooperative game with `n >= 2` players.
pub fn kernel_shap_game<F>(n: usize, value: F, budget: usize, seed: u64) -> Result<Vec<f64>>
where
    F: Fn(&[bool]) -> f64 + Sync,
{
    if n < 2 {
        return Err(Error::Config("kernel SHAP needs at least two players".into()));
    }
    let v_empty = value(&vec![false; n]);
    let v_full = value(&vec![true; n]);
    let delta = v_full - v_empty;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coalitions = build_coalitions(n, budget, &mut rng);
    let values: Vec<f64> = coalitions.members.par_iter().map(|s| value(s)).collect();

    // eliminate the last player through the efficiency constraint
    let m = n - 1;
    let last = n - 1;
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    let mut support = Vec::with_capacity(m);
    for ((s, &w), &v) in coalitions.members.iter().zip(&coalitions.weights).zip(&values) {
        let with_last = s[last];
        support.clear();
        support.extend((0..m).filter(|&i| s[i] != with_last));
        let sign = if with_last { -1.0 } else { 1.0 };
        let y = v - v_empty - if with_last { delta } else { 0.0 };
        for (k, &i) in support.iter().enumerate() {
            b[i] += w * sign * y;
            for &j in &support[k..] {
                a[(i, j)] += w;
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            a[(i, j)] = a[(j, i)];
        }
    }
    let solution = match a.clone().cholesky() {
        Some(chol) => chol.solve(&b),
        None => a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::SingularSystem(format!("{n} players, {} coalitions", values.len())))?,
    };
    if solution.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularSystem("non-finite solution".into()));
    }
    let mut phi: Vec<f64> = solution.iter().copied().collect();
    phi.push(delta - phi.iter().sum::<f64>());
    Ok(phi)
}

/// Kernel SHAP estimate of the shift attribution, deterministic in the seed.
pub fn kernel_shap(
    table: &ConditionalTable,
    values: &LeafValues,
    include_leafmeans: bool,
    config: KernelConfig,
) -> Result<Explanation> {
    let game = ShiftGame::new(table, values, include_leafmeans)?;
    let n = game.n_players();
    let budget = config.budget.unwrap_or_else(|| default_budget(n));
    let svs = kernel_shap_game(n, |s| game.value(|c| s[c]), budget, config.seed)?;
    let mu_p = game.value(|_| false);
    let mu_q = game.value(|_| true);
    let mut e = Explanation::assemble(table, svs, include_leafmeans, mu_p, mu_q, Method::KernelShap);
    e.metadata.seed = Some(config.seed);
    e.metadata.budget = Some(budget);
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::super::exact_shapley;
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn combinations_are_complete() {
        let mut count = 0;
        for_each_combination(6, 3, |idx| {
            assert!(idx.windows(2).all(|w| w[0] < w[1]));
            count += 1;
        });
        assert_eq!(count, 20);
        let mut ones = 0;
        for_each_combination(5, 1, |_| ones += 1);
        assert_eq!(ones, 5);
    }

    #[test]
    fn full_budget_matches_exact_on_two_split_tree() {
        let t = two_split_table();
        let v = LeafValues::from_tree(&two_split_tree());
        let k = kernel_shap(&t, &v, false, KernelConfig { budget: Some(2), seed: 0 }).unwrap();
        let e = exact_shapley(&t, &v, false).unwrap();
        for (a, b) in k.factor_svs().iter().zip(e.factor_svs()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn full_enumeration_matches_exact() {
        for seed in 0..5 {
            let (t, v) = random_instance(seed, 7);
            let k = kernel_shap(&t, &v, true, KernelConfig { budget: Some(1 << 8), seed }).unwrap();
            let e = exact_shapley(&t, &v, true).unwrap();
            for (a, b) in k.factor_svs().iter().zip(e.factor_svs()) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
            assert!((k.leafmeans_sv.unwrap() - e.leafmeans_sv.unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let (t, v) = random_instance(11, 12);
        let cfg = KernelConfig { budget: Some(300), seed: 5 };
        let a = kernel_shap(&t, &v, true, cfg).unwrap();
        let b = kernel_shap(&t, &v, true, cfg).unwrap();
        assert_eq!(a, b);
        assert!((a.total_sv() - a.shift()).abs() < 1e-10);
    }

    #[test]
    fn twelve_split_default_budget_is_accurate() {
        let (t, v) = shifted_instance(23, 12, 0.15);
        let k = kernel_shap(&t, &v, false, KernelConfig { budget: None, seed: 1 }).unwrap();
        let e = exact_shapley(&t, &v, false).unwrap();
        let err = k
            .factor_svs()
            .iter()
            .zip(e.factor_svs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-4, "max error {err}");
    }

    #[test]
    fn too_few_players() {
        assert!(kernel_shap_game(1, |_| 0.0, 10, 0).is_err());
    }

    #[test]
    fn error_shrinks_with_budget() {
        let budgets = [64usize, 256, 1024, (1 << 12) - 2];
        let mut mean_err = [0.0f64; 4];
        for seed in 0..20 {
            let (t, v) = random_instance(100 + seed, 11);
            let e = exact_shapley(&t, &v, true).unwrap();
            let exact: Vec<f64> = e.factor_svs();
            for (k, &budget) in budgets.iter().enumerate() {
                let est = kernel_shap(&t, &v, true, KernelConfig { budget: Some(budget), seed }).unwrap();
                let err = est
                    .factor_svs()
                    .iter()
                    .zip(&exact)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                mean_err[k] += err / 20.0;
            }
        }
        assert!(mean_err.windows(2).all(|w| w[1] <= w[0]), "{mean_err:?}");
        assert!(mean_err[3] < 1e-10);
    }
}

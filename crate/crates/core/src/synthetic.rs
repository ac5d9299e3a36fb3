//! Synthetic shift benchmark.
//!
//! Rows come from a mixture of unit-variance Gaussians in `n_features`
//! dimensions with component means drawn from `U(-2, 2)`. P and Q share the
//! components but use independently drawn mixture weights, and Q's component
//! means are displaced by `U(-shift_scale, shift_scale)` per coordinate.
//! Binary labels are Bernoulli draws with logit
//! `beta . x + 0.8 x0 x1 + sin(2 x2)`, with `beta ~ N(0, 1)` per feature.
//! The black box is a random forest fitted to the labels of `P ∪ Q`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{partition_by_threshold, Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::learn::{fit_random_forest, member_rng, LearnerConfig};
use crate::tree::TreeEnsemble;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureConfig {
    pub n_features: usize,
    pub n_components: usize,
    pub n_rows_p: usize,
    pub n_rows_q: usize,
    pub shift_scale: f64,
    pub seed: u64,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        Self {
            n_features: 5,
            n_components: 3,
            n_rows_p: 2000,
            n_rows_q: 2000,
            shift_scale: 0.5,
            seed: 0,
        }
    }
}

/// Two datasets with binary labels (as 0.0 / 1.0).
#[derive(Debug, Clone)]
pub struct ShiftPair {
    pub data_p: Dataset,
    pub data_q: Dataset,
    pub labels_p: Vec<f64>,
    pub labels_q: Vec<f64>,
}

impl ShiftPair {
    pub fn pooled(&self) -> Result<(Dataset, Vec<f64>)> {
        let data = self.data_p.concat(&self.data_q)?;
        let labels = self.labels_p.iter().chain(&self.labels_q).copied().collect();
        Ok((data, labels))
    }
}

pub fn feature_names(n: usize) -> Vec<String> {
    (0..n).map(|j| format!("x{j}")).collect()
}

fn logit(beta: &[f64], x: &[f64]) -> f64 {
    let linear: f64 = beta.iter().zip(x).map(|(b, v)| b * v).sum();
    let x1 = x.get(1).copied().unwrap_or(0.0);
    let x2 = x.get(2).copied().unwrap_or(0.0);
    linear + 0.8 * x[0] * x1 + (2.0 * x2).sin()
}

fn weights(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn pick(rng: &mut impl Rng, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

pub fn mixture_shift(config: &MixtureConfig) -> Result<ShiftPair> {
    let MixtureConfig {
        n_features: d,
        n_components: k,
        n_rows_p,
        n_rows_q,
        shift_scale,
        seed,
    } = *config;
    if d == 0 || k == 0 || n_rows_p == 0 || n_rows_q == 0 {
        return Err(Error::Config("mixture benchmark sizes must be positive".into()));
    }
    let mut rng = member_rng(seed, 0);
    let means: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let displaced: Vec<Vec<f64>> = means
        .iter()
        .map(|m| m.iter().map(|v| v + shift_scale * rng.random_range(-1.0..1.0)).collect())
        .collect();
    let (wp, wq) = (weights(&mut rng, k), weights(&mut rng, k));
    let beta: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();

    let mut draw = |n: usize, w: &[f64], centres: &[Vec<f64>]| -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let c = pick(&mut rng, w);
            let x: Vec<f64> = centres[c]
                .iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m + z
                })
                .collect();
            let prob = 1.0 / (1.0 + (-logit(&beta, &x)).exp());
            labels.push(f64::from(rng.random::<f64>() < prob));
            rows.push(x);
        }
        (rows, labels)
    };
    let (rows_p, labels_p) = draw(n_rows_p, &wp, &means);
    let (rows_q, labels_q) = draw(n_rows_q, &wq, &displaced);
    let schema = FeatureSchema::numeric(feature_names(d))?;
    Ok(ShiftPair {
        data_p: Dataset::from_rows(schema.clone(), &rows_p)?,
        data_q: Dataset::from_rows(schema, &rows_q)?,
        labels_p,
        labels_q,
    })
}

/// Splits pooled labelled data at `threshold` on `feature` (dropping it):
/// rows at or below become P, rows above become Q.
pub fn threshold_shift(data: &Dataset, labels: &[f64], feature: &str, threshold: f64) -> Result<ShiftPair> {
    if labels.len() != data.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: data.n_rows(),
            actual: labels.len(),
        });
    }
    let col = data
        .column_index(feature)
        .ok_or_else(|| Error::Schema(format!("no feature named {feature}")))?;
    let (p, q) = partition_by_threshold(data, feature, threshold, true)?;
    let (labels_p, labels_q) = labels
        .iter()
        .zip(data.rows())
        .fold((vec![], vec![]), |(mut lp, mut lq), (&y, r)| {
            if r[col] <= threshold {
                lp.push(y);
            } else {
                lq.push(y);
            }
            (lp, lq)
        });
    Ok(ShiftPair {
        data_p: p,
        data_q: q,
        labels_p,
        labels_q,
    })
}

/// A threshold shift of a fresh mixture dataset on a seeded random feature at
/// a random quantile in `[0.3, 0.7]`.
pub fn random_threshold_shift(config: &MixtureConfig) -> Result<ShiftPair> {
    let pair = mixture_shift(config)?;
    let (data, labels) = pair.pooled()?;
    let mut rng = member_rng(config.seed, 1);
    let j = rng.random_range(0..data.n_cols());
    let mut col = data.column(j);
    col.sort_by(f64::total_cmp);
    let q = rng.random_range(0.3..0.7);
    let threshold = col[((q * col.len() as f64) as usize).min(col.len() - 1)];
    let name = data.column_names()[j].clone();
    threshold_shift(&data, &labels, &name, threshold)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlackBoxConfig {
    pub n_trees: usize,
    pub max_leaves: usize,
    pub seed: u64,
}

impl Default for BlackBoxConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_leaves: 8,
            seed: 0,
        }
    }
}

/// Random forest on the pooled labels of both datasets.
pub fn fit_black_box(pair: &ShiftPair, config: &BlackBoxConfig) -> Result<TreeEnsemble> {
    let (data, labels) = pair.pooled()?;
    let cfg = LearnerConfig {
        max_leaf_nodes: config.max_leaves,
        n_estimators: config.n_trees,
        seed: config.seed,
        ..Default::default()
    };
    fit_random_forest(&data, &labels, &cfg)
}

//! Best-first tree growth and the forest / boosting learners built on it.
//!
//! One grower serves every impurity: plain regression and classification
//! trees use a single sample group, while the shift impurity used for
//! surrogates needs rows tagged by distribution (group 0 = P, group 1 = Q).

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::tree::{Aggregation, DecisionTree, EnsembleKind, Node, Predict, TreeEnsemble};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpurityKind {
    /// Sum of squared deviations from the leaf mean.
    Variance,
    /// Size-weighted Gini impurity of targets binarised at 0.5.
    Gini,
    /// Distribution-shift impurity: `(|P_l|/|P| + |Q_l|/|Q|) * |mean_P - mean_Q|`.
    Shift,
}

impl std::str::FromStr for ImpurityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variance" => Ok(Self::Variance),
            "gini" => Ok(Self::Gini),
            "shift" => Ok(Self::Shift),
            other => Err(Error::Config(format!("unknown impurity `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub max_leaf_nodes: usize,
    pub min_samples_per_side: usize,
    pub impurity_kind: ImpurityKind,
    pub n_estimators: usize,
    pub feature_subsample: f64,
    pub learning_rate: f64,
    pub seed: u64,
    /// Resample rows with replacement for each forest member.
    pub bootstrap: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            max_leaf_nodes: 8,
            min_samples_per_side: 5,
            impurity_kind: ImpurityKind::Variance,
            n_estimators: 100,
            feature_subsample: 1.0,
            learning_rate: 0.1,
            seed: 0,
            bootstrap: true,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_leaf_nodes < 2 {
            return Err(Error::Config("max_leaf_nodes must be at least 2".into()));
        }
        if self.min_samples_per_side < 1 {
            return Err(Error::Config("min_samples_per_side must be at least 1".into()));
        }
        if !(self.feature_subsample > 0.0 && self.feature_subsample <= 1.0) {
            return Err(Error::Config("feature_subsample must lie in (0, 1]".into()));
        }
        if !self.learning_rate.is_finite() {
            return Err(Error::Config("learning_rate must be finite".into()));
        }
        if self.impurity_kind == ImpurityKind::Shift {
            return Err(Error::Config(
                "shift impurity needs two distributions; use surrogate::grow_surrogate".into(),
            ));
        }
        Ok(())
    }
}

/// Sufficient statistics of a set of samples, split by group.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Stats {
    pub n: [usize; 2],
    pub sum: [f64; 2],
    pub sumsq: [f64; 2],
    pub pos: [usize; 2],
}

impl Stats {
    #[inline]
    fn add(&mut self, group: usize, y: f64, raw: f64) {
        self.n[group] += 1;
        self.sum[group] += y;
        self.sumsq[group] += y * y;
        if raw > 0.5 {
            self.pos[group] += 1;
        }
    }

    #[inline]
    fn minus(&self, other: &Stats) -> Stats {
        Stats {
            n: [self.n[0] - other.n[0], self.n[1] - other.n[1]],
            sum: [self.sum[0] - other.sum[0], self.sum[1] - other.sum[1]],
            sumsq: [self.sumsq[0] - other.sumsq[0], self.sumsq[1] - other.sumsq[1]],
            pos: [self.pos[0] - other.pos[0], self.pos[1] - other.pos[1]],
        }
    }

    fn total(&self) -> usize {
        self.n[0] + self.n[1]
    }
}

/// Impurity of a sample set. `totals` are the full group sizes |P| and |Q|,
/// only used by the shift impurity. Returns `+inf` for shift-inadmissible sets.
#[inline]
pub(crate) fn impurity_of(kind: ImpurityKind, s: &Stats, totals: [usize; 2]) -> f64 {
    match kind {
        ImpurityKind::Variance => {
            let n = s.total();
            if n == 0 {
                return 0.0;
            }
            let sum = s.sum[0] + s.sum[1];
            (s.sumsq[0] + s.sumsq[1] - sum * sum / n as f64).max(0.0)
        }
        ImpurityKind::Gini => {
            let n = s.total();
            if n == 0 {
                return 0.0;
            }
            let pos = (s.pos[0] + s.pos[1]) as f64;
            2.0 * pos * (n as f64 - pos) / n as f64
        }
        ImpurityKind::Shift => {
            if s.n[0] == 0 || s.n[1] == 0 {
                return f64::INFINITY;
            }
            let mass = s.n[0] as f64 / totals[0] as f64 + s.n[1] as f64 / totals[1] as f64;
            mass * (s.sum[0] / s.n[0] as f64 - s.sum[1] / s.n[1] as f64).abs()
        }
    }
}

/// One training row: which dataset it comes from (also its group), its row
/// index there, and its target.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sample {
    pub group: u8,
    pub row: u32,
    pub target: f64,
}

pub(crate) struct GrowParams {
    pub impurity: ImpurityKind,
    pub max_leaves: usize,
    /// Minimum total rows on each side of a split.
    pub min_per_side: usize,
    /// Minimum rows from each group on each side (0 disables the check).
    pub min_per_group_side: usize,
    pub feature_subsample: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct OpenLeaf {
    slot: usize,
    samples: Vec<Sample>,
    best: Option<Candidate>,
}

/// Best-first growth: repeatedly split the open leaf whose best admissible
/// split yields the largest impurity decrease.
pub(crate) fn grow(
    sources: &[&Dataset],
    samples: Vec<Sample>,
    params: &GrowParams,
    rng: &mut ChaCha8Rng,
) -> DecisionTree {
    let d = sources[0].n_cols();
    let mut totals = [0usize; 2];
    for s in &samples {
        totals[s.group as usize] += 1;
    }
    let totals = [totals[0].max(1), totals[1].max(1)];

    let mut arena = vec![Node::Leaf { value: 0.0 }];
    let mut open: Vec<OpenLeaf> = Vec::new();
    let best = best_split(sources, &samples, params, totals, d, rng);
    open.push(OpenLeaf {
        slot: 0,
        samples,
        best,
    });
    let mut finished: Vec<OpenLeaf> = Vec::new();

    let mut n_leaves = 1;
    while n_leaves < params.max_leaves {
        // earliest-created leaf wins ties
        let pick = open
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.best.map(|c| (i, c.gain)))
            .fold(None, |acc: Option<(usize, f64)>, (i, g)| match acc {
                Some((_, bg)) if bg >= g => acc,
                _ => Some((i, g)),
            });
        let Some((idx, _)) = pick else { break };
        let leaf = open.remove(idx);
        let cand = leaf.best.expect("picked leaf has a candidate");
        let (left, right): (Vec<Sample>, Vec<Sample>) = leaf.samples.into_iter().partition(|s| {
            sources[s.group as usize].value(s.row as usize, cand.feature) <= cand.threshold
        });
        let (ls, rs) = (arena.len(), arena.len() + 1);
        arena.push(Node::Leaf { value: 0.0 });
        arena.push(Node::Leaf { value: 0.0 });
        arena[leaf.slot] = Node::Split {
            feature: cand.feature,
            threshold: cand.threshold,
            left: ls,
            right: rs,
        };
        for (slot, part) in [(ls, left), (rs, right)] {
            let best = best_split(sources, &part, params, totals, d, rng);
            open.push(OpenLeaf {
                slot,
                samples: part,
                best,
            });
        }
        n_leaves += 1;
    }
    finished.extend(open);
    for leaf in &finished {
        let n = leaf.samples.len();
        let value = if n == 0 {
            0.0
        } else {
            leaf.samples.iter().map(|s| s.target).sum::<f64>() / n as f64
        };
        arena[leaf.slot] = Node::Leaf { value };
    }
    DecisionTree::from_nodes(&arena, 0, d).expect("grown arena is a proper tree")
}

fn best_split(
    sources: &[&Dataset],
    samples: &[Sample],
    params: &GrowParams,
    totals: [usize; 2],
    d: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Candidate> {
    let features: Vec<usize> = if params.feature_subsample < 1.0 && d > 1 {
        let k = ((params.feature_subsample * d as f64).ceil() as usize).clamp(1, d);
        let mut f = sample_indices(rng, d, k).into_vec();
        f.sort_unstable();
        f
    } else {
        (0..d).collect()
    };
    if samples.len() < 2 * params.min_per_side {
        return None;
    }
    let first = samples.first()?.target;
    if params.impurity != ImpurityKind::Shift && samples.iter().all(|s| s.target == first) {
        return None;
    }

    // center targets so the variance prefix sums stay well conditioned
    let center = match params.impurity {
        ImpurityKind::Variance => samples.iter().map(|s| s.target).sum::<f64>() / samples.len() as f64,
        _ => 0.0,
    };
    let mut total = Stats::default();
    for s in samples {
        total.add(s.group as usize, s.target - center, s.target);
    }
    let parent = impurity_of(params.impurity, &total, totals);
    if !parent.is_finite() || parent <= 0.0 {
        return None;
    }

    let mut best: Option<Candidate> = None;
    let mut order: Vec<(f64, Sample)> = Vec::with_capacity(samples.len());
    for &feature in &features {
        order.clear();
        order.extend(
            samples
                .iter()
                .map(|s| (sources[s.group as usize].value(s.row as usize, feature), *s)),
        );
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        if order[0].0 == order[order.len() - 1].0 {
            continue;
        }
        let mut left = Stats::default();
        for i in 0..order.len() - 1 {
            let (v, s) = order[i];
            left.add(s.group as usize, s.target - center, s.target);
            let next = order[i + 1].0;
            if v == next {
                continue;
            }
            let right = total.minus(&left);
            if left.total() < params.min_per_side || right.total() < params.min_per_side {
                continue;
            }
            if params.min_per_group_side > 0
                && (left.n.iter().chain(&right.n)).any(|&c| c < params.min_per_group_side)
            {
                continue;
            }
            let child = impurity_of(params.impurity, &left, totals) + impurity_of(params.impurity, &right, totals);
            let gain = parent - child;
            if !(gain > 1e-12 * parent) {
                continue;
            }
            if best.is_none_or(|b| gain > b.gain) {
                let mut threshold = 0.5 * (v + next);
                if !(threshold >= v && threshold < next) {
                    threshold = v;
                }
                best = Some(Candidate {
                    gain,
                    feature,
                    threshold,
                });
            }
        }
    }
    best
}

fn check_targets(data: &Dataset, targets: &[f64]) -> Result<()> {
    if targets.len() != data.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: data.n_rows(),
            actual: targets.len(),
        });
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::Config("targets must be finite".into()));
    }
    Ok(())
}

fn params_from(config: &LearnerConfig) -> GrowParams {
    GrowParams {
        impurity: config.impurity_kind,
        max_leaves: config.max_leaf_nodes,
        min_per_side: config.min_samples_per_side,
        min_per_group_side: 0,
        feature_subsample: config.feature_subsample,
    }
}

fn all_samples(targets: &[f64]) -> Vec<Sample> {
    targets
        .iter()
        .enumerate()
        .map(|(i, &t)| Sample {
            group: 0,
            row: i as u32,
            target: t,
        })
        .collect()
}

/// Per-member RNG: the master seed with the member index as ChaCha stream.
pub(crate) fn member_rng(seed: u64, member: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member as u64);
    rng
}

/// Fits a single CART-style tree by best-first growth.
pub fn fit_tree(data: &Dataset, targets: &[f64], config: &LearnerConfig) -> Result<DecisionTree> {
    config.validate()?;
    check_targets(data, targets)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    Ok(grow(&[data], all_samples(targets), &params_from(config), &mut rng))
}

/// Random forest: bootstrap resampling (when enabled) plus per-split
/// feature subsampling, averaged with equal weights.
pub fn fit_random_forest(data: &Dataset, targets: &[f64], config: &LearnerConfig) -> Result<TreeEnsemble> {
    config.validate()?;
    check_targets(data, targets)?;
    if config.n_estimators == 0 {
        return Err(Error::Config("n_estimators must be positive".into()));
    }
    let params = params_from(config);
    let n = data.n_rows();
    let trees: Vec<DecisionTree> = (0..config.n_estimators)
        .into_par_iter()
        .map(|k| {
            let mut rng = member_rng(config.seed, k);
            let samples = if config.bootstrap {
                (0..n)
                    .map(|_| {
                        let i = rng.random_range(0..n);
                        Sample {
                            group: 0,
                            row: i as u32,
                            target: targets[i],
                        }
                    })
                    .collect()
            } else {
                all_samples(targets)
            };
            grow(&[data], samples, &params, &mut rng)
        })
        .collect();
    TreeEnsemble::mean_of(trees, EnsembleKind::RandomForest)
}

/// Least-squares gradient boosting: each stage fits the residuals of the
/// running prediction and is added with weight `learning_rate`.
pub fn fit_gradient_boosted(
    data: &Dataset,
    targets: &[f64],
    config: &LearnerConfig,
) -> Result<TreeEnsemble> {
    config.validate()?;
    check_targets(data, targets)?;
    if config.n_estimators == 0 {
        return Err(Error::Config("n_estimators must be positive".into()));
    }
    let params = params_from(config);
    let n = data.n_rows();
    let base = targets.iter().sum::<f64>() / n as f64;
    let mut running = vec![base; n];
    let mut trees = Vec::with_capacity(config.n_estimators);
    for k in 0..config.n_estimators {
        let residuals: Vec<f64> = targets.iter().zip(&running).map(|(t, p)| t - p).collect();
        let mut rng = member_rng(config.seed, k);
        let tree = grow(&[data], all_samples(&residuals), &params, &mut rng);
        for (i, r) in data.rows().enumerate() {
            running[i] += config.learning_rate * tree.predict_unchecked(r);
        }
        trees.push(tree);
    }
    let weights = vec![config.learning_rate; trees.len()];
    TreeEnsemble::new(trees, weights, base, Aggregation::WeightedSum, EnsembleKind::GradientBoosted)
}

//! Explanation quality metrics: SV entropy, reweighting-based faithfulness
//! (R-Faithfulness and activation-curve areas) and a one-sided Mann-Whitney
//! U test for comparing metric distributions.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::conditionals::SplitConditional;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::shapley::{Explanation, SHIFT_EPSILON};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SvEntropy {
    /// Entropy in nats of the normalised `|phi_c|`.
    pub nats: f64,
    /// Set when every SV is zero; `nats` is then 0 by convention.
    pub all_zero: bool,
}

/// Entropy of absolute SVs, treated as a distribution.
pub fn entropy_of(svs: &[f64]) -> SvEntropy {
    let total: f64 = svs.iter().map(|s| s.abs()).sum();
    if total == 0.0 {
        return SvEntropy {
            nats: 0.0,
            all_zero: true,
        };
    }
    let nats = svs
        .iter()
        .map(|s| s.abs() / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    SvEntropy { nats, all_zero: false }
}

/// Entropy of the conditional-factor SVs; LeafMeans is not included.
pub fn sv_entropy(expl: &Explanation) -> Result<SvEntropy> {
    if expl.factors.is_empty() {
        return Err(Error::Empty("explanation has no conditional factors".into()));
    }
    Ok(entropy_of(&expl.factor_svs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Reweight P rows to Q's conditional.
    Forward,
    /// Reweight Q rows to P's conditional.
    Backward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReweightSpec {
    pub conditional: SplitConditional,
    pub p_prob: f64,
    pub q_prob: f64,
    pub direction: Direction,
}

impl ReweightSpec {
    pub fn from_factor(expl: &Explanation, index: usize, direction: Direction) -> Self {
        let f = &expl.factors[index];
        Self {
            conditional: f.conditional.clone(),
            p_prob: f.p_prob,
            q_prob: f.q_prob,
            direction,
        }
    }

    /// (probability being replaced, probability swapped in)
    fn from_to(&self) -> (f64, f64) {
        match self.direction {
            Direction::Forward => (self.p_prob, self.q_prob),
            Direction::Backward => (self.q_prob, self.p_prob),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        let (from, to) = self.from_to();
        from != to && (from <= 0.0 || from >= 1.0)
    }
}

/// Per-row weights moving the source rows' conditional frequency to the
/// other distribution's value. Rows outside the conditional's subgroup keep
/// weight 1.
pub fn reweight(rows: &Dataset, spec: &ReweightSpec) -> Result<Vec<f64>> {
    let (from, to) = spec.from_to();
    if from == to {
        return Ok(vec![1.0; rows.n_rows()]);
    }
    if spec.is_degenerate() {
        return Err(Error::DegenerateReweight(format!(
            "{} has probability {from} in the source distribution",
            spec.conditional.label
        )));
    }
    let (w_true, w_false) = (to / from, (1.0 - to) / (1.0 - from));
    Ok(rows
        .rows()
        .map(|r| {
            if !spec.conditional.reaches(r) {
                1.0
            } else if spec.conditional.test(r) {
                w_true
            } else {
                w_false
            }
        })
        .collect())
}

/// Mean of `pred * prod_c lambda_c` over the source rows. All specs must
/// share one direction, and `rows`/`pred` must be that direction's source.
pub fn reweighted_mean(pred: &[f64], rows: &Dataset, specs: &[ReweightSpec]) -> Result<f64> {
    if pred.len() != rows.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: rows.n_rows(),
            actual: pred.len(),
        });
    }
    if rows.n_rows() == 0 {
        return Err(Error::Empty("no rows to reweight".into()));
    }
    let mut weights = vec![1.0; rows.n_rows()];
    for spec in specs {
        for (w, l) in weights.iter_mut().zip(reweight(rows, spec)?) {
            *w *= l;
        }
    }
    Ok(pred.iter().zip(&weights).map(|(f, w)| f * w).sum::<f64>() / pred.len() as f64)
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if x.is_empty() || constant(x) || constant(y) {
        return None;
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Target predictions on both datasets.
#[derive(Debug, Clone, Copy)]
pub struct EvalData<'a> {
    pub data_p: &'a Dataset,
    pub data_q: &'a Dataset,
    pub pred_p: &'a [f64],
    pub pred_q: &'a [f64],
}

impl<'a> EvalData<'a> {
    fn source(&self, direction: Direction) -> (&'a Dataset, &'a [f64]) {
        match direction {
            Direction::Forward => (self.data_p, self.pred_p),
            Direction::Backward => (self.data_q, self.pred_q),
        }
    }

    fn means(&self) -> Result<(f64, f64)> {
        if self.pred_p.is_empty() || self.pred_q.is_empty() {
            return Err(Error::Empty("no predictions".into()));
        }
        let m = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        Ok((m(self.pred_p), m(self.pred_q)))
    }
}

fn usable_factors(expl: &Explanation, direction: Direction) -> (Vec<usize>, Vec<usize>) {
    (0..expl.factors.len()).partition(|&c| !ReweightSpec::from_factor(expl, c, direction).is_degenerate())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RFaithfulness {
    /// `None` when fewer than two usable factors remain or either vector
    /// has zero variance.
    pub r: Option<f64>,
    /// Factors skipped because their reweighting is degenerate.
    pub dropped: Vec<usize>,
}

/// Pearson correlation between each factor's SV and the mean prediction after
/// reweighting that one conditional. The backward correlation is negated so
/// both directions read the same way.
pub fn r_faithfulness(expl: &Explanation, eval: &EvalData, direction: Direction) -> Result<RFaithfulness> {
    let (keep, dropped) = usable_factors(expl, direction);
    if keep.len() < 2 {
        return Ok(RFaithfulness { r: None, dropped });
    }
    let (rows, pred) = eval.source(direction);
    let mut reweighted = Vec::with_capacity(keep.len());
    for &c in &keep {
        reweighted.push(reweighted_mean(pred, rows, &[ReweightSpec::from_factor(expl, c, direction)])?);
    }
    let svs: Vec<f64> = keep.iter().map(|&c| expl.factors[c].sv).collect();
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    Ok(RFaithfulness {
        r: pearson(&svs, &reweighted).map(|r| sign * r),
        dropped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AucFaithfulness {
    /// Area under the activation curve; `None` when the shift is ~0.
    pub auac: Option<f64>,
    /// Area under the inverse activation curve.
    pub auiac: Option<f64>,
    pub dropped: Vec<usize>,
}

/// Factor order from the most to the least shift-aligned SV; ties keep
/// factor order.
pub fn activation_order(svs: &[f64], shift: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..svs.len()).collect();
    if shift >= 0.0 {
        order.sort_by(|&a, &b| svs[b].total_cmp(&svs[a]));
    } else {
        order.sort_by(|&a, &b| svs[a].total_cmp(&svs[b]));
    }
    order
}

fn curve_area(order: &[usize], specs: &[ReweightSpec], pred: &[f64], rows: &Dataset, start: f64, span: f64) -> Result<f64> {
    let mut weights = vec![1.0; rows.n_rows()];
    let mut total = 0.0;
    for &c in order {
        for (w, l) in weights.iter_mut().zip(reweight(rows, &specs[c])?) {
            *w *= l;
        }
        let m = pred.iter().zip(&weights).map(|(f, w)| f * w).sum::<f64>() / pred.len() as f64;
        total += (m - start) / span;
    }
    Ok(total / order.len() as f64)
}

/// AUAC and AUIAC: cumulative reweighting in SV order (and reverse order),
/// normalised by the shift of the target's mean prediction.
pub fn auc_faithfulness(expl: &Explanation, eval: &EvalData, direction: Direction) -> Result<AucFaithfulness> {
    let (keep, dropped) = usable_factors(expl, direction);
    let (mu_p, mu_q) = eval.means()?;
    if keep.is_empty() || (mu_q - mu_p).abs() <= SHIFT_EPSILON {
        return Ok(AucFaithfulness {
            auac: None,
            auiac: None,
            dropped,
        });
    }
    let (start, span) = match direction {
        Direction::Forward => (mu_p, mu_q - mu_p),
        Direction::Backward => (mu_q, mu_p - mu_q),
    };
    let specs: Vec<ReweightSpec> = keep.iter().map(|&c| ReweightSpec::from_factor(expl, c, direction)).collect();
    let svs: Vec<f64> = keep.iter().map(|&c| expl.factors[c].sv).collect();
    let order = activation_order(&svs, mu_q - mu_p);
    let reverse: Vec<usize> = order.iter().rev().copied().collect();
    let (rows, pred) = eval.source(direction);
    Ok(AucFaithfulness {
        auac: Some(curve_area(&order, &specs, pred, rows, start, span)?),
        auiac: Some(curve_area(&reverse, &specs, pred, rows, start, span)?),
        dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MannWhitney {
    /// U statistic of the first sample (pairs where it is larger, ties 1/2).
    pub u: f64,
    pub z: f64,
    /// One-sided p-value for "first sample tends to be larger".
    pub p_value: f64,
}

/// One-sided Mann-Whitney U test that `a` is stochastically greater than
/// `b`, by normal approximation with tie and continuity corrections.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("Mann-Whitney U needs two nonempty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Config("Mann-Whitney U samples contain NaN".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut pooled: Vec<(f64, bool)> = a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));

    let n = pooled.len();
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_sum_a += avg_rank * pooled[i..=j].iter().filter(|p| p.1).count() as f64;
        i = j + 1;
    }
    let u = rank_sum_a - na * (na + 1.0) / 2.0;
    let mean = na * nb / 2.0;
    let nf = n as f64;
    let var = na * nb / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)).max(1.0));
    if var <= 0.0 {
        return Ok(MannWhitney {
            u,
            z: 0.0,
            p_value: 0.5,
        });
    }
    let z = (u - mean - 0.5) / var.sqrt();
    let normal = Normal::standard();
    Ok(MannWhitney {
        u,
        z,
        p_value: normal.sf(z),
    })
}

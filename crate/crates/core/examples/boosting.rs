//! Gradient-boosted ensembles: the shift of the summed output is explained
//! tree by tree, and grows as stages are added.

use shapshift::ensemble::{explain_ensemble, EnsembleConfig};
use shapshift::learn::{fit_gradient_boosted, LearnerConfig};
use shapshift::synthetic::{mixture_shift, MixtureConfig};

fn main() -> shapshift::Result<()> {
    let pair = mixture_shift(&MixtureConfig { seed: 9, ..Default::default() })?;
    let (pooled, y) = pair.pooled()?;
    let gb = fit_gradient_boosted(&pooled, &y, &LearnerConfig { n_estimators: 80, learning_rate: 0.1, ..Default::default() })?;
    for n in [5, 20, 80] {
        let part = gb.truncated(n)?;
        let out = explain_ensemble(&part, &pair.data_p, &pair.data_q, &EnsembleConfig::default())?;
        println!(
            "{n:>3} stages: shift {:+.4}, best tree #{} leaves {:.1}% unexplained",
            out.best.shift(),
            out.best.metadata.tree_index.unwrap_or(0),
            out.best.percent_unexplained.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

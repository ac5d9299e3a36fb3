//! A 1000-leaf tree is too large for exact enumeration. Prune it to a
//! 15-leaf prefix, explain that exactly, and compare against Kernel SHAP on
//! the full tree.

use std::time::Instant;

use shapshift::ensemble::{explain_tree, ExplainOptions, SvMethod};
use shapshift::learn::ImpurityKind;
use shapshift::shapley::KernelConfig;
use shapshift::surrogate::{grow_surrogate, prune_regrow, SurrogateConfig};
use shapshift::synthetic::{fit_black_box, mixture_shift, BlackBoxConfig, MixtureConfig};
use shapshift::tree::Predict;

fn main() -> shapshift::Result<()> {
    let pair = mixture_shift(&MixtureConfig { seed: 2, n_rows_p: 10_000, n_rows_q: 10_000, ..Default::default() })?;
    let forest = fit_black_box(&pair, &BlackBoxConfig::default())?;
    let (fp, fq) = (forest.predict_dataset(&pair.data_p)?, forest.predict_dataset(&pair.data_q)?);
    let big = grow_surrogate(
        &pair.data_p,
        &pair.data_q,
        &fp,
        &fq,
        &SurrogateConfig { max_leaves: 1000, impurity: ImpurityKind::Variance, min_per_distribution: 1 },
    )?;
    let bp = big.predict_dataset(&pair.data_p)?;
    let bq = big.predict_dataset(&pair.data_q)?;
    println!("full tree: {} leaves", big.n_leaves());

    let t = Instant::now();
    let pruned = prune_regrow(&big, &pair.data_p, &pair.data_q, &bp, &bq, 15)?;
    let small = explain_tree(&pruned.tree, &bp, &bq, &pair.data_p, &pair.data_q, &ExplainOptions::default())?;
    println!("pruned to 15 leaves in {:.1} ms, unexplained {:.2}%", t.elapsed().as_secs_f64() * 1e3, small.percent_unexplained.unwrap_or(f64::NAN));

    let t = Instant::now();
    let kernel = ExplainOptions { method: SvMethod::Kernel(KernelConfig::default()), ..Default::default() };
    let full = explain_tree(&big, &bp, &bq, &pair.data_p, &pair.data_q, &kernel)?;
    println!("kernel SHAP on {} factors in {:.2} s", full.factors.len() + 1, t.elapsed().as_secs_f64());

    println!("   pruned    full   conditional");
    for i in small.ranking().into_iter().take(5) {
        let f = &small.factors[i];
        let orig = pruned.original_ids[f.conditional.node_id];
        let k = full.factors.iter().find(|g| g.conditional.node_id == orig).map_or(f64::NAN, |g| g.sv);
        println!("  {:+.4}  {:+.4}  {}", f.sv, k, f.conditional.label);
    }
    Ok(())
}

//! Explains a random forest's shift through each member tree and keeps the
//! tree that leaves the least of it unexplained.

use shapshift::ensemble::{explain_ensemble, EnsembleConfig, TreeScan};
use shapshift::synthetic::{fit_black_box, mixture_shift, BlackBoxConfig, MixtureConfig};

fn main() -> shapshift::Result<()> {
    let pair = mixture_shift(&MixtureConfig { seed: 3, ..Default::default() })?;
    let forest = fit_black_box(&pair, &BlackBoxConfig { n_trees: 50, seed: 3, ..Default::default() })?;
    let out = explain_ensemble(&forest, &pair.data_p, &pair.data_q, &EnsembleConfig::default())?;

    let failed = out.scan.iter().filter(|s| matches!(s, TreeScan::Failed { .. })).count();
    let mut pus: Vec<f64> = out.scan.iter().filter_map(TreeScan::percent_unexplained).collect();
    pus.sort_by(f64::total_cmp);
    println!("{} trees scanned, {failed} failed", out.scan.len());
    println!("PercentUnexplained: best {:.2}%  median {:.2}%  worst {:.2}%", pus[0], pus[pus.len() / 2], pus[pus.len() - 1]);

    let best = &out.best;
    println!("best tree #{} (shift {:+.4})", best.metadata.tree_index.unwrap_or(0), best.shift());
    for i in best.ranking() {
        println!("  {:+.4}  {}", best.factors[i].sv, best.factors[i].conditional.label);
    }
    println!("  {:+.4}  LeafMeans", best.leafmeans_sv.unwrap_or(0.0));
    Ok(())
}

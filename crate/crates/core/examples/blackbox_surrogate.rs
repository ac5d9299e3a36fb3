//! Explains an opaque model known only through its predictions by growing a
//! shift-impurity surrogate tree on both datasets.

use shapshift::ensemble::{explain_tree, ExplainOptions};
use shapshift::surrogate::{grow_surrogate, SurrogateConfig};
use shapshift::synthetic::{fit_black_box, random_threshold_shift, BlackBoxConfig, MixtureConfig};
use shapshift::tree::Predict;

fn main() -> shapshift::Result<()> {
    // P and Q are the two halves of one dataset split on a hidden feature
    let pair = random_threshold_shift(&MixtureConfig { seed: 12, ..Default::default() })?;
    let model = fit_black_box(&pair, &BlackBoxConfig::default())?;
    let fp = model.predict_dataset(&pair.data_p)?;
    let fq = model.predict_dataset(&pair.data_q)?;

    for leaves in [4, 8, 12] {
        let tree = grow_surrogate(&pair.data_p, &pair.data_q, &fp, &fq, &SurrogateConfig { max_leaves: leaves, ..Default::default() })?;
        let e = explain_tree(&tree, &fp, &fq, &pair.data_p, &pair.data_q, &ExplainOptions::default())?;
        println!("{leaves:>2} leaves: shift {:+.4}, unexplained {:.2}%", e.shift(), e.percent_unexplained.unwrap_or(f64::NAN));
        if leaves == 8 {
            for i in e.ranking().into_iter().take(3) {
                println!("    {:+.4}  {}", e.factors[i].sv, e.factors[i].conditional.label);
            }
        }
    }
    Ok(())
}

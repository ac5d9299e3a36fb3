//! Fits a small regression tree on two shifted samples and attributes the
//! change in its mean prediction to the tree's split conditionals.

use shapshift::ensemble::{explain_tree, ExplainOptions};
use shapshift::learn::{fit_tree, LearnerConfig};
use shapshift::report::{render_svg, ExplanationRecord};
use shapshift::synthetic::{mixture_shift, MixtureConfig};
use shapshift::tree::Predict;

fn main() -> shapshift::Result<()> {
    let pair = mixture_shift(&MixtureConfig { seed: 7, ..Default::default() })?;
    let (pooled, labels) = pair.pooled()?;
    let tree = fit_tree(&pooled, &labels, &LearnerConfig { max_leaf_nodes: 6, ..Default::default() })?;

    let pp = tree.predict_dataset(&pair.data_p)?;
    let pq = tree.predict_dataset(&pair.data_q)?;
    let e = explain_tree(&tree, &pp, &pq, &pair.data_p, &pair.data_q, &ExplainOptions::default())?;

    println!("mu_P {:.4}  mu_Q {:.4}  shift {:+.4}", e.mu_p, e.mu_q, e.shift());
    for i in e.ranking() {
        let f = &e.factors[i];
        println!("{:+.4}  {}  ({:.3} -> {:.3})", f.sv, f.conditional.label, f.p_prob, f.q_prob);
    }
    println!("sum of SVs {:+.4}", e.total_sv());

    let record = ExplanationRecord::new(&e, 0.0);
    let path = std::env::temp_dir().join("shapshift_tree.svg");
    std::fs::write(&path, render_svg(&record))?;
    println!("chart written to {}", path.display());
    Ok(())
}

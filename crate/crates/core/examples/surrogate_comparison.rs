//! Grows shift-impurity and Gini surrogates of a random-forest black box on
//! the synthetic mixture benchmark and compares their PercentUnexplained.

use shapshift::ensemble::{explain_tree, ExplainOptions};
use shapshift::learn::ImpurityKind;
use shapshift::surrogate::{grow_surrogate, SurrogateConfig};
use shapshift::synthetic::{fit_black_box, mixture_shift, BlackBoxConfig, MixtureConfig};
use shapshift::tree::Predict;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

fn main() -> shapshift::Result<()> {
    let sizes = [4, 6, 8, 10, 12, 16];
    let mut table = vec![(Vec::new(), Vec::new()); sizes.len()];
    for seed in 0..10 {
        let pair = mixture_shift(&MixtureConfig { seed, ..Default::default() })?;
        let forest = fit_black_box(&pair, &BlackBoxConfig { seed, ..Default::default() })?;
        let fp = forest.predict_dataset(&pair.data_p)?;
        let fq = forest.predict_dataset(&pair.data_q)?;
        for (k, &max_leaves) in sizes.iter().enumerate() {
            for impurity in [ImpurityKind::Shift, ImpurityKind::Gini] {
                let cfg = SurrogateConfig { max_leaves, impurity, ..Default::default() };
                let tree = grow_surrogate(&pair.data_p, &pair.data_q, &fp, &fq, &cfg)?;
                let e = explain_tree(&tree, &fp, &fq, &pair.data_p, &pair.data_q, &ExplainOptions::default())?;
                let pu = e.percent_unexplained.unwrap_or(f64::NAN);
                if impurity == ImpurityKind::Shift { table[k].0.push(pu) } else { table[k].1.push(pu) }
            }
        }
    }
    println!("leaves  shift PU  gini PU   (median over 10 seeds)");
    for (k, (s, g)) in table.into_iter().enumerate() {
        println!("{:>6}  {:>7.2}%  {:>7.2}%", sizes[k], median(s), median(g));
    }
    Ok(())
}

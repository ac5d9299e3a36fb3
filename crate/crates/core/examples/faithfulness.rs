//! Checks an explanation against reweighting: applying each conditional's
//! shift alone, and applying them cumulatively in SV order.

use shapshift::ensemble::{explain_ensemble, EnsembleConfig};
use shapshift::metrics::{auc_faithfulness, mann_whitney_u, r_faithfulness, sv_entropy, Direction, EvalData};
use shapshift::synthetic::{fit_black_box, random_threshold_shift, BlackBoxConfig, MixtureConfig};
use shapshift::tree::Predict;

fn main() -> shapshift::Result<()> {
    let (mut auac, mut auiac) = (vec![], vec![]);
    for seed in 0..20 {
        let pair = random_threshold_shift(&MixtureConfig { seed, n_rows_p: 1500, n_rows_q: 1500, ..Default::default() })?;
        let forest = fit_black_box(&pair, &BlackBoxConfig { n_trees: 40, seed, ..Default::default() })?;
        let (fp, fq) = (forest.predict_dataset(&pair.data_p)?, forest.predict_dataset(&pair.data_q)?);
        let eval = EvalData { data_p: &pair.data_p, data_q: &pair.data_q, pred_p: &fp, pred_q: &fq };

        let e = explain_ensemble(&forest, &pair.data_p, &pair.data_q, &EnsembleConfig::default())?.best;
        let r = r_faithfulness(&e, &eval, Direction::Forward)?;
        let a = auc_faithfulness(&e, &eval, Direction::Forward)?;
        let h = sv_entropy(&e)?;
        println!(
            "seed {seed:>2}: R {:>7.4}  AUAC {:.3}  AUIAC {:.3}  entropy {:.3}",
            r.r.unwrap_or(f64::NAN),
            a.auac.unwrap_or(f64::NAN),
            a.auiac.unwrap_or(f64::NAN),
            h.nats
        );
        if let (Some(x), Some(y)) = (a.auac, a.auiac) {
            auac.push(x);
            auiac.push(y);
        }
    }
    let mw = mann_whitney_u(&auac, &auiac)?;
    println!("AUAC > AUIAC: U = {}, one-sided p = {:.2e}", mw.u, mw.p_value);
    Ok(())
}

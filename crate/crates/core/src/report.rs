//! Serialized explanation records, SVG bar charts, and evaluation reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::conditionals::PathStep;
use crate::ensemble::TreeScan;
use crate::error::Result;
use crate::shapley::{Explanation, Method};

/// Bumped whenever a field of [`ExplanationRecord`] changes meaning.
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorRecord {
    pub label: String,
    pub node_id: usize,
    pub path: Vec<PathStep>,
    pub feature: usize,
    pub threshold: f64,
    pub p_prob: f64,
    pub q_prob: f64,
    pub sv: f64,
}

/// How a surrogate tree was grown for a black-box explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateRecord {
    pub impurity: String,
    pub max_leaves: usize,
    pub n_leaves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub version: u32,
    pub method: Method,
    pub mu_p: f64,
    pub mu_q: f64,
    pub shift: f64,
    pub factors: Vec<FactorRecord>,
    pub leafmeans_sv: Option<f64>,
    pub percent_unexplained: Option<f64>,
    pub flags: Vec<String>,
    pub timing_ms: f64,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub tree_index: Option<usize>,
    pub n_rows_p: Option<usize>,
    pub n_rows_q: Option<usize>,
    pub empirical_mu_p: Option<f64>,
    pub empirical_mu_q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surrogate: Option<SurrogateRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<Vec<TreeScan>>,
}

impl ExplanationRecord {
    pub fn new(expl: &Explanation, timing_ms: f64) -> Self {
        let md = &expl.metadata;
        Self {
            version: REPORT_VERSION,
            method: expl.method,
            mu_p: expl.mu_p,
            mu_q: expl.mu_q,
            shift: expl.shift(),
            factors: expl
                .factors
                .iter()
                .map(|f| FactorRecord {
                    label: f.conditional.label.clone(),
                    node_id: f.conditional.node_id,
                    path: f.conditional.path.clone(),
                    feature: f.conditional.feature,
                    threshold: f.conditional.threshold,
                    p_prob: f.p_prob,
                    q_prob: f.q_prob,
                    sv: f.sv,
                })
                .collect(),
            leafmeans_sv: expl.leafmeans_sv,
            percent_unexplained: expl.percent_unexplained,
            flags: md.flags.clone(),
            timing_ms,
            seed: md.seed,
            budget: md.budget,
            tree_index: md.tree_index,
            n_rows_p: md.n_rows_p,
            n_rows_q: md.n_rows_q,
            empirical_mu_p: md.empirical_mu_p,
            empirical_mu_q: md.empirical_mu_q,
            surrogate: None,
            scan: None,
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

const WIDTH: f64 = 800.0;
const ROW: f64 = 40.0;
const LABEL_CHARS: usize = 60;
const BAR_LEFT: f64 = 420.0;
const BAR_RIGHT: f64 = 790.0;
const POSITIVE: &str = "#d6604d";
const NEGATIVE: &str = "#4393c3";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Shortens at a separator so no number in the label is cut in half.
fn shorten(label: &str) -> String {
    if label.chars().count() <= LABEL_CHARS {
        return label.to_owned();
    }
    let head: String = label.chars().take(LABEL_CHARS).collect();
    let cut = head.rfind([' ', ',', '|']).unwrap_or(0);
    format!("{}…", head[..cut].trim_end_matches([' ', ',', '|']))
}

/// Horizontal bar chart of the SVs, one bar per conditional plus LeafMeans,
/// `800 × 40·n_bars` pixels. SVs are printed to 4 decimals and the
/// PercentUnexplained to 2.
pub fn render_svg(record: &ExplanationRecord) -> String {
    let mut bars: Vec<(String, f64, bool)> = record
        .factors
        .iter()
        .map(|f| (shorten(&f.label), f.sv, false))
        .collect();
    if let Some(lm) = record.leafmeans_sv {
        let note = match record.percent_unexplained {
            Some(pu) => format!("LeafMeans (unexplained {pu:.2}%)"),
            None => "LeafMeans (unexplained undefined)".to_owned(),
        };
        bars.push((note, lm, true));
    }
    let height = ROW * bars.len().max(1) as f64;
    let max_abs = bars.iter().map(|b| b.1.abs()).fold(0.0_f64, f64::max);
    let mid = (BAR_LEFT + BAR_RIGHT) / 2.0;
    let half = (BAR_RIGHT - BAR_LEFT) / 2.0 - 50.0;
    let scale = if max_abs > 0.0 { half / max_abs } else { 0.0 };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r##"<line x1="{mid}" y1="0" x2="{mid}" y2="{height}" stroke="#333" stroke-width="1"/>"##
    );
    for (i, (label, sv, is_lm)) in bars.iter().enumerate() {
        let y = ROW * i as f64;
        let w = sv.abs() * scale;
        let x = if *sv >= 0.0 { mid } else { mid - w };
        let colour = if *sv >= 0.0 { POSITIVE } else { NEGATIVE };
        let opacity = if *is_lm { 0.45 } else { 1.0 };
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            BAR_LEFT - 8.0,
            y + 24.0,
            escape(label)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{}" width="{w:.2}" height="{}" fill="{colour}" fill-opacity="{opacity}"/>"#,
            y + 10.0,
            ROW - 20.0
        );
        let (tx, anchor) = if *sv >= 0.0 { (x + w + 4.0, "start") } else { (x - 4.0, "end") };
        let _ = writeln!(
            out,
            r#"<text x="{tx:.2}" y="{}" text-anchor="{anchor}">{sv:.4}</text>"#,
            y + 24.0
        );
    }
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed,
}

/// Metrics of one shift pair in an evaluation run. Unrequested or
/// undefined metrics are `None`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub name: String,
    pub status: Option<RowStatus>,
    pub error: Option<String>,
    pub shift: Option<f64>,
    pub percent_unexplained: Option<f64>,
    pub entropy: Option<f64>,
    pub r_faith_forward: Option<f64>,
    pub r_faith_backward: Option<f64>,
    pub auac: Option<f64>,
    pub auiac: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregates {
    pub n_rows: usize,
    pub n_ok: usize,
    pub n_failed: usize,
    pub median_percent_unexplained: Option<f64>,
    pub median_entropy: Option<f64>,
    pub median_r_faith_forward: Option<f64>,
    pub median_r_faith_backward: Option<f64>,
    pub median_auac: Option<f64>,
    pub median_auiac: Option<f64>,
    /// Mann-Whitney U test of AUAC against AUIAC over the rows with both.
    pub mwu_u: Option<f64>,
    pub mwu_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub version: u32,
    pub metrics: Vec<String>,
    pub rows: Vec<EvaluationRow>,
    pub aggregates: Aggregates,
}

pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

impl EvaluationReport {
    pub fn new(metrics: Vec<String>, rows: Vec<EvaluationRow>) -> Self {
        let col = |f: fn(&EvaluationRow) -> Option<f64>| -> Vec<f64> { rows.iter().filter_map(f).collect() };
        let pu = col(|r| r.percent_unexplained);
        let ent = col(|r| r.entropy);
        let rf = col(|r| r.r_faith_forward);
        let rb = col(|r| r.r_faith_backward);
        let ac = col(|r| r.auac);
        let ic = col(|r| r.auiac);
        let (auac_pairs, auiac_pairs): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter_map(|r| Some((r.auac?, r.auiac?)))
            .unzip();
        let mwu = crate::metrics::mann_whitney_u(&auac_pairs, &auiac_pairs).ok();
        let n_ok = rows.iter().filter(|r| r.status == Some(RowStatus::Ok)).count();
        let aggregates = Aggregates {
            n_rows: rows.len(),
            n_ok,
            n_failed: rows.len() - n_ok,
            median_percent_unexplained: median(&pu),
            median_entropy: median(&ent),
            median_r_faith_forward: median(&rf),
            median_r_faith_backward: median(&rb),
            median_auac: median(&ac),
            median_auiac: median(&ic),
            mwu_u: mwu.as_ref().map(|m| m.u),
            mwu_p: mwu.as_ref().map(|m| m.p_value),
        };
        Self {
            version: REPORT_VERSION,
            metrics,
            rows,
            aggregates,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapley::exact_shapley;
    use crate::shapley::fixtures::two_split_table;
    use crate::shapley::LeafValues;

    fn record() -> ExplanationRecord {
        let values = LeafValues::new(vec![0.1, 0.5, 0.9], vec![0.2, 0.5, 0.8]);
        let expl = exact_shapley(&two_split_table(), &values, true).unwrap();
        ExplanationRecord::new(&expl, 1.5)
    }

    fn json_numbers(v: &serde_json::Value, out: &mut Vec<f64>) {
        match v {
            serde_json::Value::Number(n) => out.push(n.as_f64().unwrap()),
            serde_json::Value::Array(a) => a.iter().for_each(|x| json_numbers(x, out)),
            serde_json::Value::Object(o) => o.values().for_each(|x| json_numbers(x, out)),
            _ => {}
        }
    }

    fn text_numbers(svg: &str) -> Vec<(f64, usize)> {
        let mut out = vec![];
        for chunk in svg.split("<text").skip(1) {
            let body = &chunk[chunk.find('>').unwrap() + 1..chunk.find("</text>").unwrap()];
            let mut cur = String::new();
            for ch in body.chars().chain(std::iter::once(' ')) {
                if ch.is_ascii_digit() || ch == '.' || (ch == '-' && cur.is_empty()) {
                    cur.push(ch);
                } else {
                    if let Ok(x) = cur.trim_end_matches('.').parse::<f64>() {
                        let decimals = cur.split('.').nth(1).map_or(0, str::len);
                        out.push((x, decimals));
                    }
                    cur.clear();
                }
            }
        }
        out
    }

    #[test]
    fn json_round_trip_and_fields() {
        let r = record();
        let text = r.to_json_string().unwrap();
        assert_eq!(ExplanationRecord::from_json_str(&text).unwrap(), r);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in [
            "version",
            "method",
            "mu_p",
            "mu_q",
            "shift",
            "factors",
            "leafmeans_sv",
            "percent_unexplained",
            "flags",
            "timing_ms",
            "seed",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        for key in ["label", "path", "p_prob", "q_prob", "sv"] {
            assert!(v["factors"][0].get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn svg_size_and_numbers_come_from_json() {
        let r = record();
        let svg = render_svg(&r);
        assert!(svg.contains(r#"width="800" height="120""#), "{svg}");
        assert!(svg.contains(POSITIVE) || svg.contains(NEGATIVE));
        let mut known = vec![];
        json_numbers(&serde_json::to_value(&r).unwrap(), &mut known);
        let found = text_numbers(&svg);
        assert!(found.len() >= 4);
        for (x, decimals) in found {
            let tol = 0.5 * 10f64.powi(-(decimals as i32)) + 1e-12;
            assert!(
                known.iter().any(|k| (k - x).abs() <= tol),
                "{x} not in JSON"
            );
        }
    }

    #[test]
    fn long_labels_cut_at_separator() {
        let label = "P(age ≤ 40.5 | income ≤ 12345.678, hours ≤ 40.25, education ≤ 13.5 is false)";
        let s = shorten(label);
        assert!(s.ends_with('…'));
        assert!(s.chars().count() <= LABEL_CHARS + 1);
        assert!(label.starts_with(s.trim_end_matches('…')));
    }

    #[test]
    fn evaluation_aggregates() {
        let rows: Vec<EvaluationRow> = (0..5)
            .map(|i| EvaluationRow {
                name: format!("r{i}"),
                status: Some(RowStatus::Ok),
                auac: Some(0.8 + 0.01 * i as f64),
                auiac: Some(0.2 + 0.01 * i as f64),
                ..Default::default()
            })
            .chain(std::iter::once(EvaluationRow {
                name: "bad".into(),
                status: Some(RowStatus::Failed),
                error: Some("missing".into()),
                ..Default::default()
            }))
            .collect();
        let rep = EvaluationReport::new(vec!["auc-faith".into()], rows);
        assert_eq!(rep.aggregates.n_ok, 5);
        assert_eq!(rep.aggregates.n_failed, 1);
        assert!((rep.aggregates.median_auac.unwrap() - 0.82).abs() < 1e-12);
        assert!(rep.aggregates.mwu_p.unwrap() < 0.05);
        assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use shapshift::data::Dataset;
use shapshift::learn::{fit_tree, LearnerConfig};
use shapshift::model_json::{export_json, ModelDocument};
use shapshift::synthetic::{fit_black_box, mixture_shift, BlackBoxConfig, MixtureConfig};
use shapshift::tree::{EnsembleKind, Predict, TreeEnsemble};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shapshift"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }
}

fn labelled(data: &Dataset, labels: &[f64], pred: Vec<f64>) -> Dataset {
    data.clone()
        .with_predictions(pred)
        .unwrap()
        .with_labels(labels.iter().map(|y| y.to_string()).collect())
        .unwrap()
}

/// Writes a shift pair, a schema, a black-box forest's predictions, and a
/// fitted tree into `dir`, under the names `p.csv`, `q.csv`, `schema.json`,
/// `tree.json`, `one.json` and `forest.json`.
fn write_pair(dir: &Path, seed: u64) {
    let pair = mixture_shift(&MixtureConfig {
        seed,
        n_rows_p: 800,
        n_rows_q: 800,
        ..Default::default()
    })
    .unwrap();
    let forest = fit_black_box(
        &pair,
        &BlackBoxConfig {
            n_trees: 20,
            seed,
            ..Default::default()
        },
    )
    .unwrap();
    let pred_p = forest.predict_dataset(&pair.data_p).unwrap();
    let pred_q = forest.predict_dataset(&pair.data_q).unwrap();
    labelled(&pair.data_p, &pair.labels_p, pred_p).write_csv(dir.join("p.csv")).unwrap();
    labelled(&pair.data_q, &pair.labels_q, pred_q).write_csv(dir.join("q.csv")).unwrap();
    std::fs::write(dir.join("schema.json"), serde_json::to_string(pair.data_p.schema()).unwrap()).unwrap();

    let names = pair.data_p.column_names().to_vec();
    let (pooled, y) = pair.pooled().unwrap();
    let tree = fit_tree(
        &pooled,
        &y,
        &LearnerConfig {
            max_leaf_nodes: 6,
            min_samples_per_side: 40,
            ..Default::default()
        },
    )
    .unwrap();
    export_json(&ModelDocument::new(names.clone(), tree.clone()), dir.join("tree.json")).unwrap();
    let one = TreeEnsemble::mean_of(vec![tree], EnsembleKind::Other).unwrap();
    export_json(&ModelDocument::new(names.clone(), one), dir.join("one.json")).unwrap();
    export_json(&ModelDocument::new(names, forest), dir.join("forest.json")).unwrap();
}

fn fixture(seed: u64) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    write_pair(dir.path(), seed);
    Fixture { dir }
}

fn json_stdout(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn svs(v: &Value) -> Vec<f64> {
    v["factors"].as_array().unwrap().iter().map(|f| f["sv"].as_f64().unwrap()).collect()
}

fn explain(f: &Fixture, target: &str, extra: &[&str]) -> Output {
    let (p, q, s) = (f.s("p.csv"), f.s("q.csv"), f.s("schema.json"));
    let mut args = vec!["explain", target, "--data-p", &p, "--data-q", &q, "--schema", &s];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn explain_tree_sums_to_shift_and_writes_svg() {
    let f = fixture(1);
    let model = f.s("tree.json");
    let svg = f.s("chart.svg");
    let v = json_stdout(&explain(&f, "tree", &["--model", &model, "--svg", &svg]));
    assert_eq!(v["version"], 1);
    let total: f64 = svs(&v).iter().sum::<f64>() + v["leafmeans_sv"].as_f64().unwrap();
    let shift = v["mu_q"].as_f64().unwrap() - v["mu_p"].as_f64().unwrap();
    assert!((total - shift).abs() < 1e-9, "{total} vs {shift}");
    assert!(v["leafmeans_sv"].as_f64().unwrap().abs() < 1e-12);
    let chart = std::fs::read_to_string(&svg).unwrap();
    let bars = v["factors"].as_array().unwrap().len() + 1;
    assert!(chart.contains(&format!(r#"width="800" height="{}""#, 40 * bars)));
}

#[test]
fn one_tree_ensemble_matches_tree() {
    let f = fixture(2);
    let (tm, em) = (f.s("tree.json"), f.s("one.json"));
    let t = json_stdout(&explain(&f, "tree", &["--model", &tm]));
    let e = json_stdout(&explain(&f, "ensemble", &["--model", &em]));
    for (a, b) in svs(&t).iter().zip(svs(&e)) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(e["leafmeans_sv"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(e["scan"].as_array().unwrap().len(), 1);
}

#[test]
fn forest_ensemble_reports_scan() {
    let f = fixture(3);
    let m = f.s("forest.json");
    let v = json_stdout(&explain(&f, "ensemble", &["--model", &m, "--max-trees", "5"]));
    assert_eq!(v["scan"].as_array().unwrap().len(), 5);
    assert!(v["tree_index"].as_u64().unwrap() < 5);
}

#[test]
fn blackbox_shift_surrogate_beats_gini() {
    let f = fixture(4);
    let pu = |imp: &str| {
        let v = json_stdout(&explain(
            &f,
            "blackbox",
            &["--pred-col", "prediction", "--max-leaves", "10", "--impurity", imp],
        ));
        assert_eq!(v["surrogate"]["impurity"], imp);
        v["percent_unexplained"].as_f64().unwrap()
    };
    let (shift, gini) = (pu("shift"), pu("gini"));
    assert!(shift <= gini, "shift {shift} gini {gini}");
}

#[test]
fn blackbox_from_prediction_files_and_kernel() {
    let f = fixture(5);
    for (src, dst) in [("p.csv", "pp.csv"), ("q.csv", "pq.csv")] {
        let text = std::fs::read_to_string(f.path(src)).unwrap();
        let col: Vec<String> = text
            .lines()
            .map(|l| l.split(',').rev().nth(1).unwrap().to_owned())
            .collect();
        std::fs::write(f.path(dst), col.join("\n")).unwrap();
    }
    let (pp, pq) = (f.s("pp.csv"), f.s("pq.csv"));
    let a = json_stdout(&explain(&f, "blackbox", &["--pred-p", &pp, "--pred-q", &pq]));
    let b = json_stdout(&explain(&f, "blackbox", &["--pred-col", "prediction"]));
    assert_eq!(svs(&a), svs(&b));
    let k = json_stdout(&explain(
        &f,
        "blackbox",
        &["--pred-col", "prediction", "--method", "kernel", "--seed", "9"],
    ));
    assert_eq!(k["method"], "kernel_shap");
    assert_eq!(k["seed"], 9);
    for (x, y) in svs(&k).iter().zip(svs(&b)) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn fit_flag_trains_on_labels() {
    let f = fixture(6);
    let v = json_stdout(&explain(
        &f,
        "tree",
        &["--fit", "tree", "--label-col", "label", "--max-leaves", "4"],
    ));
    assert_eq!(v["factors"].as_array().unwrap().len(), 3);
    let missing = explain(&f, "tree", &["--fit", "tree"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn undefined_conditional_exits_3() {
    let f = fixture(7);
    let names: Value = serde_json::from_str(&std::fs::read_to_string(f.path("schema.json")).unwrap()).unwrap();
    let names: Vec<Value> = names.as_array().unwrap().iter().map(|s| s["name"].clone()).collect();
    // No row has x0 <= -1000, so the left child is reached by nobody.
    let model = serde_json::json!({
        "kind": "tree", "feature_names": names,
        "trees": [{"root": 0,
            "nodes": [{"id": 0, "feature": 0, "threshold": -1000.0, "left": 1, "right": 2},
                      {"id": 1, "feature": 1, "threshold": 0.0, "left": 3, "right": 4}],
            "leaves": [{"id": 2, "value": 0.5}, {"id": 3, "value": 0.0}, {"id": 4, "value": 1.0}]}]
    });
    std::fs::write(f.path("bad.json"), model.to_string()).unwrap();
    let m = f.s("bad.json");
    let out = explain(&f, "tree", &["--model", &m]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.trim().lines().count(), 1);
    let err: Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(err["error"], "undefined_conditional");
}

#[test]
fn validation_errors_exit_2() {
    let f = fixture(8);
    let m = f.s("tree.json");
    let out = run(&[
        "explain", "tree", "--model", &m, "--data-p", "/nonexistent/p.csv", "--data-q", "/nonexistent/q.csv",
        "--schema", &f.s("schema.json"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert!(err["error"].is_string());
    assert_eq!(run(&["explain", "tree"]).status.code(), Some(2));
    let bad = bin().env("SHAPSHIFT_THREADS", "zero").args(["simulate-proxy", "--repeats", "1"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn evaluate_manifest_isolates_failures() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = vec![];
    for i in 0..10u64 {
        let sub = dir.path().join(format!("s{i}"));
        std::fs::create_dir(&sub).unwrap();
        write_pair(&sub, 100 + i);
        rows.push(serde_json::json!({
            "name": format!("s{i}"), "target": "tree", "model": format!("s{i}/tree.json"),
            "data_p": format!("s{i}/p.csv"), "data_q": format!("s{i}/q.csv"), "schema": format!("s{i}/schema.json"),
        }));
    }
    rows.push(serde_json::json!({
        "name": "missing", "target": "tree", "model": "s0/tree.json",
        "data_p": "nope.csv", "data_q": "s0/q.csv", "schema": "s0/schema.json",
    }));
    let manifest = dir.path().join("manifest.json");
    std::fs::write(&manifest, serde_json::json!({ "rows": rows }).to_string()).unwrap();
    let out = bin()
        .env("SHAPSHIFT_THREADS", "2")
        .args(["evaluate", "--manifest", manifest.to_str().unwrap()])
        .output()
        .unwrap();
    let v = json_stdout(&out);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 11);
    assert_eq!(v["aggregates"]["n_ok"], 10);
    let bad = rows.iter().find(|r| r["name"] == "missing").unwrap();
    assert_eq!(bad["status"], "failed");
    let reason = bad["error"].as_str().unwrap();
    assert!(reason.starts_with("io") || reason.starts_with("csv"), "{reason}");
    for r in rows.iter().filter(|r| r["status"] == "ok") {
        assert!(r["entropy"].is_number());
        assert!(r["percent_unexplained"].is_number());
    }
    assert!(v["aggregates"]["mwu_p"].is_number());
    assert!(v["aggregates"]["median_auac"].is_number());

    std::fs::write(&manifest, r#"{"rows": []}"#).unwrap();
    let empty = run(&["evaluate", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(empty.status.code(), Some(2));
}

#[test]
fn simulate_proxy_is_deterministic_and_zero_when_equal() {
    let args = ["simulate-proxy", "--repeats", "200", "--seed", "4"];
    let a = json_stdout(&run(&args));
    let b = json_stdout(&run(&args));
    assert_eq!(a, b);
    assert_eq!(a["n_differences"], 200 * 8);
    let same = json_stdout(&run(&["simulate-proxy", "--repeats", "50", "--correlation", "1"]));
    assert_eq!(same["mean_diff"].as_f64().unwrap(), 0.0);
    assert_eq!(same["std_diff"].as_f64().unwrap(), 0.0);
    assert_eq!(same["frac_within_0_05"].as_f64().unwrap(), 1.0);
}

//! Command-line front end. Exit codes: 0 success, 2 usage or validation
//! error, 3 explanation infeasible. Errors are printed to stderr as one line
//! of JSON: `{"error": "<kind>", "message": "..."}`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureSchema};
use crate::ensemble::{explain_ensemble, explain_tree, EnsembleConfig, ExplainOptions, SvMethod};
use crate::error::{Error, Result};
use crate::learn::{fit_gradient_boosted, fit_random_forest, fit_tree, ImpurityKind, LearnerConfig};
use crate::metrics::{auc_faithfulness, r_faithfulness, sv_entropy, Direction, EvalData};
use crate::model_json::import_json;
use crate::report::{render_svg, EvaluationReport, EvaluationRow, ExplanationRecord, RowStatus, SurrogateRecord};
use crate::shapley::{Explanation, KernelConfig, DEFAULT_EXACT_LIMIT};
use crate::surrogate::{grow_surrogate, proxy_simulation, ProxyConfig, SurrogateConfig};
use crate::tree::{EnsembleKind, Model, Predict, TreeEnsemble};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "shapshift", version, about = "Attribute a model's prediction shift between two datasets to tree conditionals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explain the shift of a tree, an ensemble, or a black box.
    Explain {
        #[arg(value_enum)]
        target: TargetKind,
        #[command(flatten)]
        args: ExplainArgs,
    },
    /// Run the metric suite over a manifest of shift pairs.
    Evaluate(EvaluateArgs),
    /// Sample random trees and measure how far the leaf-probability proxy is
    /// from the conditional game.
    SimulateProxy(ProxyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Tree,
    Ensemble,
    Blackbox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitKind {
    Tree,
    Forest,
    Boosted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    #[default]
    Exact,
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpurityArg {
    Variance,
    Gini,
    Shift,
}

impl From<ImpurityArg> for ImpurityKind {
    fn from(a: ImpurityArg) -> Self {
        match a {
            ImpurityArg::Variance => ImpurityKind::Variance,
            ImpurityArg::Gini => ImpurityKind::Gini,
            ImpurityArg::Shift => ImpurityKind::Shift,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    /// Model JSON file.
    #[arg(long, conflicts_with = "fit")]
    pub model: Option<PathBuf>,
    /// Fit a model on the pooled labelled rows instead of loading one.
    #[arg(long, value_enum)]
    pub fit: Option<FitKind>,
    #[arg(long)]
    pub data_p: PathBuf,
    #[arg(long)]
    pub data_q: PathBuf,
    /// Feature schema JSON.
    #[arg(long)]
    pub schema: PathBuf,
    /// Column of both data files holding black-box predictions.
    #[arg(long)]
    pub pred_col: Option<String>,
    /// Separate prediction CSVs (first column) for P and Q.
    #[arg(long, requires = "pred_q")]
    pub pred_p: Option<PathBuf>,
    #[arg(long, requires = "pred_p")]
    pub pred_q: Option<PathBuf>,
    /// Label column used by --fit.
    #[arg(long)]
    pub label_col: Option<String>,
    /// Leaves of the fitted model, or of the black-box surrogate.
    #[arg(long)]
    pub max_leaves: Option<usize>,
    /// Split criterion of the fitted model or surrogate.
    #[arg(long, value_enum)]
    pub impurity: Option<ImpurityArg>,
    #[arg(long)]
    pub n_estimators: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
    pub method: MethodArg,
    /// Coalition budget for kernel SHAP.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Only scan the first N trees of an ensemble.
    #[arg(long)]
    pub max_trees: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', num_args = 1.., default_values_t = [MetricArg::PercentUnexplained, MetricArg::Entropy, MetricArg::RFaith, MetricArg::AucFaith])]
    pub metrics: Vec<MetricArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    PercentUnexplained,
    Entropy,
    RFaith,
    AucFaith,
}

impl MetricArg {
    fn name(self) -> &'static str {
        match self {
            MetricArg::PercentUnexplained => "percent-unexplained",
            MetricArg::Entropy => "entropy",
            MetricArg::RFaith => "r-faith",
            MetricArg::AucFaith => "auc-faith",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ProxyArgs {
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 5000)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub correlation: f64,
}

/// One explanation job. Paths are resolved against a base directory, which is
/// the manifest's directory for evaluation rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainRequest {
    #[serde(default)]
    pub name: Option<String>,
    pub target: TargetKind,
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub fit: Option<FitKind>,
    pub data_p: PathBuf,
    pub data_q: PathBuf,
    pub schema: PathBuf,
    #[serde(default)]
    pub pred_col: Option<String>,
    #[serde(default)]
    pub pred_p: Option<PathBuf>,
    #[serde(default)]
    pub pred_q: Option<PathBuf>,
    #[serde(default)]
    pub label_col: Option<String>,
    #[serde(default)]
    pub max_leaves: Option<usize>,
    #[serde(default)]
    pub impurity: Option<ImpurityArg>,
    #[serde(default)]
    pub n_estimators: Option<usize>,
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub method: MethodArg,
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub max_trees: Option<usize>,
}

impl ExplainRequest {
    pub fn from_args(target: TargetKind, a: &ExplainArgs) -> Self {
        Self {
            name: None,
            target,
            model: a.model.clone(),
            fit: a.fit,
            data_p: a.data_p.clone(),
            data_q: a.data_q.clone(),
            schema: a.schema.clone(),
            pred_col: a.pred_col.clone(),
            pred_p: a.pred_p.clone(),
            pred_q: a.pred_q.clone(),
            label_col: a.label_col.clone(),
            max_leaves: a.max_leaves,
            impurity: a.impurity,
            n_estimators: a.n_estimators,
            learning_rate: a.learning_rate,
            method: a.method,
            budget: a.budget,
            seed: a.seed,
            max_trees: a.max_trees,
        }
    }
}

/// An explanation together with the data it was computed on.
#[derive(Debug, Clone)]
pub struct ExplainOutcome {
    pub explanation: Explanation,
    pub record: ExplanationRecord,
    pub data_p: Dataset,
    pub data_q: Dataset,
    /// Target-model predictions on each dataset.
    pub pred_p: Vec<f64>,
    pub pred_q: Vec<f64>,
}

impl ExplainOutcome {
    pub fn eval_data(&self) -> EvalData<'_> {
        EvalData {
            data_p: &self.data_p,
            data_q: &self.data_q,
            pred_p: &self.pred_p,
            pred_q: &self.pred_q,
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read_prediction_file(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut out = vec![];
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let cell = rec.get(0).unwrap_or("");
        out.push(cell.parse::<f64>().map_err(|e| Error::Parse {
            row: i + 1,
            column: "prediction".into(),
            message: e.to_string(),
        })?);
    }
    if out.is_empty() {
        return Err(Error::Empty(format!("{} has no predictions", path.display())));
    }
    Ok(out)
}

fn numeric_labels(data: &Dataset) -> Result<Vec<f64>> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::Config("--fit needs --label-col".into()))?;
    labels
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.parse::<f64>().map_err(|e| Error::Parse {
                row: i + 1,
                column: "label".into(),
                message: e.to_string(),
            })
        })
        .collect()
}

fn learner_config(req: &ExplainRequest) -> LearnerConfig {
    let d = LearnerConfig::default();
    LearnerConfig {
        max_leaf_nodes: req.max_leaves.unwrap_or(d.max_leaf_nodes),
        impurity_kind: req.impurity.map_or(d.impurity_kind, Into::into),
        n_estimators: req.n_estimators.unwrap_or(d.n_estimators),
        learning_rate: req.learning_rate.unwrap_or(d.learning_rate),
        seed: req.seed,
        ..d
    }
}

fn load_model(req: &ExplainRequest, base: &Path, p: &Dataset, q: &Dataset) -> Result<Model> {
    match (&req.model, req.fit) {
        (Some(path), None) => {
            let doc = import_json(resolve(base, path))?;
            if doc.feature_names != p.column_names() {
                return Err(Error::Schema(format!(
                    "model features {:?} do not match data columns {:?}",
                    doc.feature_names,
                    p.column_names()
                )));
            }
            Ok(doc.model)
        }
        (None, Some(kind)) => {
            let pooled = p.concat(q)?;
            let y = numeric_labels(&pooled)?;
            let mut cfg = learner_config(req);
            if req.target == TargetKind::Blackbox {
                // The surrogate flags describe the surrogate, not the black box.
                cfg.max_leaf_nodes = LearnerConfig::default().max_leaf_nodes;
                cfg.impurity_kind = ImpurityKind::Variance;
            }
            Ok(match kind {
                FitKind::Tree => fit_tree(&pooled, &y, &cfg)?.into(),
                FitKind::Forest => fit_random_forest(&pooled, &y, &cfg)?.into(),
                FitKind::Boosted => fit_gradient_boosted(&pooled, &y, &cfg)?.into(),
            })
        }
        (Some(_), Some(_)) => Err(Error::Config("give either --model or --fit, not both".into())),
        (None, None) => Err(Error::Config("one of --model or --fit is required".into())),
    }
}

fn options(req: &ExplainRequest) -> ExplainOptions {
    let method = match req.method {
        MethodArg::Exact => SvMethod::Exact {
            limit: DEFAULT_EXACT_LIMIT,
        },
        MethodArg::Kernel => SvMethod::Kernel(KernelConfig {
            budget: req.budget,
            seed: req.seed,
        }),
    };
    ExplainOptions {
        method,
        ..Default::default()
    }
}

/// Loads data and model, explains the shift, and builds the JSON record.
pub fn run_explain(req: &ExplainRequest, base: &Path) -> Result<ExplainOutcome> {
    let schema = FeatureSchema::from_json_file(resolve(base, &req.schema))?;
    let label_col = req.fit.and(req.label_col.as_deref());
    if req.fit.is_some() && label_col.is_none() {
        return Err(Error::Config("--fit needs --label-col".into()));
    }
    let pred_col = req.pred_col.as_deref();
    let data_p = Dataset::load_csv(resolve(base, &req.data_p), &schema, pred_col, label_col)?;
    let data_q = Dataset::load_csv(resolve(base, &req.data_q), &schema, pred_col, label_col)?;
    let opts = options(req);
    let started = Instant::now();

    let (explanation, pred_p, pred_q, surrogate, scan) = match req.target {
        TargetKind::Tree => {
            let model = load_model(req, base, &data_p, &data_q)?;
            let Model::Tree(tree) = model else {
                return Err(Error::Config("the tree target needs a single-tree model".into()));
            };
            let pred_p = tree.predict_dataset(&data_p)?;
            let pred_q = tree.predict_dataset(&data_q)?;
            let e = explain_tree(&tree, &pred_p, &pred_q, &data_p, &data_q, &opts)?;
            (e, pred_p, pred_q, None, None)
        }
        TargetKind::Ensemble => {
            let ensemble = match load_model(req, base, &data_p, &data_q)? {
                Model::Ensemble(e) => e,
                Model::Tree(t) => TreeEnsemble::mean_of(vec![t], EnsembleKind::Other)?,
            };
            let cfg = EnsembleConfig {
                max_trees: req.max_trees,
                parallel: true,
                options: opts,
            };
            let result = explain_ensemble(&ensemble, &data_p, &data_q, &cfg)?;
            let pred_p = ensemble.predict_dataset(&data_p)?;
            let pred_q = ensemble.predict_dataset(&data_q)?;
            (result.best, pred_p, pred_q, None, Some(result.scan))
        }
        TargetKind::Blackbox => {
            let (pred_p, pred_q) = match (&req.pred_p, &req.pred_q, pred_col) {
                (Some(a), Some(b), None) => (read_prediction_file(&resolve(base, a))?, read_prediction_file(&resolve(base, b))?),
                (None, None, Some(_)) => (
                    data_p.predictions().unwrap_or_default().to_vec(),
                    data_q.predictions().unwrap_or_default().to_vec(),
                ),
                (None, None, None) if req.model.is_some() || req.fit.is_some() => {
                    let model = load_model(req, base, &data_p, &data_q)?;
                    (model.predict_dataset(&data_p)?, model.predict_dataset(&data_q)?)
                }
                _ => {
                    return Err(Error::Config(
                        "blackbox needs --pred-col, --pred-p/--pred-q, or a model".into(),
                    ))
                }
            };
            let scfg = SurrogateConfig {
                max_leaves: req.max_leaves.unwrap_or(SurrogateConfig::default().max_leaves),
                impurity: req.impurity.map_or(ImpurityKind::Shift, Into::into),
                ..Default::default()
            };
            let tree = grow_surrogate(&data_p, &data_q, &pred_p, &pred_q, &scfg)?;
            let e = explain_tree(&tree, &pred_p, &pred_q, &data_p, &data_q, &opts)?;
            let info = SurrogateRecord {
                impurity: format!("{:?}", scfg.impurity).to_lowercase(),
                max_leaves: scfg.max_leaves,
                n_leaves: tree.n_leaves(),
            };
            (e, pred_p, pred_q, Some(info), None)
        }
    };

    let mut record = ExplanationRecord::new(&explanation, started.elapsed().as_secs_f64() * 1e3);
    record.surrogate = surrogate;
    record.scan = scan;
    Ok(ExplainOutcome {
        explanation,
        record,
        data_p,
        data_q,
        pred_p,
        pred_q,
    })
}

/// Machine-readable kind of an error.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
        Error::Json(_) => "json",
        Error::Schema(_) => "schema",
        Error::Parse { .. } => "parse",
        Error::Empty(_) => "empty",
        Error::EmptyPartition(_) => "empty_partition",
        Error::Type(_) => "type",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::Config(_) => "config",
        Error::InvalidModel(_) => "invalid_model",
        Error::UndefinedConditional { .. } => "undefined_conditional",
        Error::TooManyFactors { .. } => "too_many_factors",
        Error::SingularSystem(_) => "singular_system",
        Error::Renormalisation(_) => "renormalisation",
        Error::DegenerateReweight(_) => "degenerate_reweight",
        Error::MissingLeafMeans => "missing_leaf_means",
        Error::AllTreesFailed(_) => "all_trees_failed",
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::UndefinedConditional { .. }
        | Error::TooManyFactors { .. }
        | Error::SingularSystem(_)
        | Error::Renormalisation(_)
        | Error::AllTreesFailed(_) => EXIT_INFEASIBLE,
        _ => EXIT_USAGE,
    }
}

fn report_error(e: &Error) -> i32 {
    let line = serde_json::json!({"error": error_kind(e), "message": e.to_string()});
    eprintln!("{line}");
    exit_code(e)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn cmd_explain(target: TargetKind, args: &ExplainArgs) -> Result<()> {
    let req = ExplainRequest::from_args(target, args);
    let outcome = run_explain(&req, Path::new("."))?;
    write_output(args.out.as_deref(), &outcome.record.to_json_string()?)?;
    if let Some(svg) = &args.svg {
        std::fs::write(svg, render_svg(&outcome.record))?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    rows: Vec<ExplainRequest>,
}

/// Explains one manifest row and computes the requested metrics. Failures
/// are recorded on the row.
pub fn evaluate_row(req: &ExplainRequest, base: &Path, metrics: &[MetricArg], index: usize) -> EvaluationRow {
    let name = req.name.clone().unwrap_or_else(|| format!("row{index}"));
    let run = || -> Result<EvaluationRow> {
        let out = run_explain(req, base)?;
        let e = &out.explanation;
        let eval = out.eval_data();
        let mut row = EvaluationRow {
            name: name.clone(),
            status: Some(RowStatus::Ok),
            shift: Some(e.shift()),
            ..Default::default()
        };
        for m in metrics {
            match m {
                MetricArg::PercentUnexplained => row.percent_unexplained = e.percent_unexplained,
                MetricArg::Entropy => row.entropy = Some(sv_entropy(e)?.nats),
                MetricArg::RFaith => {
                    row.r_faith_forward = r_faithfulness(e, &eval, Direction::Forward)?.r;
                    row.r_faith_backward = r_faithfulness(e, &eval, Direction::Backward)?.r;
                }
                MetricArg::AucFaith => {
                    let auc = auc_faithfulness(e, &eval, Direction::Forward)?;
                    row.auac = auc.auac;
                    row.auiac = auc.auiac;
                }
            }
        }
        Ok(row)
    };
    run().unwrap_or_else(|err| EvaluationRow {
        name,
        status: Some(RowStatus::Failed),
        error: Some(format!("{}: {err}", error_kind(&err))),
        ..Default::default()
    })
}

/// Evaluates every manifest row in parallel.
pub fn run_evaluate(manifest: &Path, metrics: &[MetricArg]) -> Result<EvaluationReport> {
    let text = std::fs::read_to_string(manifest)?;
    let m: Manifest = serde_json::from_str(&text)?;
    if m.rows.is_empty() {
        return Err(Error::Empty("manifest has no rows".into()));
    }
    if metrics.is_empty() {
        return Err(Error::Config("no metrics requested".into()));
    }
    let base = manifest.parent().unwrap_or(Path::new("."));
    let rows: Vec<EvaluationRow> = m
        .rows
        .par_iter()
        .enumerate()
        .map(|(i, r)| evaluate_row(r, base, metrics, i))
        .collect();
    let names = metrics.iter().map(|m| m.name().to_owned()).collect();
    Ok(EvaluationReport::new(names, rows))
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<i32> {
    let report = run_evaluate(&args.manifest, &args.metrics)?;
    write_output(args.out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
    Ok(if report.aggregates.n_ok > 0 { EXIT_OK } else { EXIT_INFEASIBLE })
}

fn cmd_simulate_proxy(args: &ProxyArgs) -> Result<()> {
    let cfg = ProxyConfig {
        depth: args.depth,
        n_repeats: args.repeats,
        seed: args.seed,
        correlation: args.correlation,
    };
    let summary = proxy_simulation(&cfg)?;
    write_output(None, &serde_json::to_string_pretty(&summary)?)
}

/// Applies `SHAPSHIFT_THREADS` to the global worker pool.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SHAPSHIFT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("SHAPSHIFT_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

pub fn run(cli: Cli) -> i32 {
    if let Err(e) = configure_threads() {
        return report_error(&e);
    }
    let result = match &cli.command {
        Command::Explain { target, args } => cmd_explain(*target, args).map(|_| EXIT_OK),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::SimulateProxy(args) => cmd_simulate_proxy(args).map(|_| EXIT_OK),
    };
    result.unwrap_or_else(|e| report_error(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_explain_flags() {
        let cli = Cli::try_parse_from([
            "shapshift", "explain", "blackbox", "--data-p", "p.csv", "--data-q", "q.csv", "--schema", "s.json",
            "--pred-col", "yhat", "--max-leaves", "10", "--impurity", "gini", "--method", "kernel", "--budget", "300",
        ])
        .unwrap();
        let Command::Explain { target, args } = cli.command else {
            panic!()
        };
        assert_eq!(target, TargetKind::Blackbox);
        let req = ExplainRequest::from_args(target, &args);
        assert_eq!(req.impurity, Some(ImpurityArg::Gini));
        assert_eq!(req.budget, Some(300));
        assert!(matches!(options(&req).method, SvMethod::Kernel(KernelConfig { budget: Some(300), .. })));
    }

    #[test]
    fn model_and_fit_conflict() {
        let r = Cli::try_parse_from([
            "shapshift", "explain", "tree", "--model", "m.json", "--fit", "tree", "--data-p", "p", "--data-q", "q",
            "--schema", "s",
        ]);
        assert!(r.is_err());
    }

    #[test]
    fn metrics_list() {
        let cli = Cli::try_parse_from(["shapshift", "evaluate", "--manifest", "m.json", "--metrics", "entropy,auc-faith"])
            .unwrap();
        let Command::Evaluate(a) = cli.command else { panic!() };
        assert_eq!(a.metrics, vec![MetricArg::Entropy, MetricArg::AucFaith]);
    }

    #[test]
    fn exit_codes() {
        let undefined = Error::UndefinedConditional {
            node_id: 1,
            distribution: "Q",
        };
        assert_eq!(exit_code(&undefined), EXIT_INFEASIBLE);
        assert_eq!(exit_code(&Error::Schema("x".into())), EXIT_USAGE);
        assert_eq!(error_kind(&undefined), "undefined_conditional");
    }
}

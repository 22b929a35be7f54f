//! Command-line surface for the popularity-trend pipeline.
//!
//! Typical flow: `synth` a dataset (or bring your own NDJSON), then
//! `extract-trends`, `learn-params`, `train`, `predict`, `evaluate`, and
//! optionally `regress` for the popularity-regression comparison.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use trendlearner::cluster::{
    assign_clusters, extract_trends, ClusterModel, DEFAULT_STABILITY_TOL, DEFAULT_STABILITY_WINDOW,
};
use trendlearner::dataset::{load_dataset, save_dataset};
use trendlearner::error::{Error, ErrorCategory};
use trendlearner::metrics::{bias_correlations, f1_scores, remaining_interest, EvalReport};
use trendlearner::persist::{
    load_cluster_model, load_monitor_params, load_trendlearner_model, read_predictions_csv,
    save_cluster_model, save_monitor_params, save_report, save_trendlearner_model,
    write_beta_cv_csv, write_mrse_csv, write_predictions_csv, write_ri_ccdf_csv,
    write_ri_scatter_csv, PredictionRecord,
};
use trendlearner::pipeline::{
    learn_params, predict_trendlearner, train_trendlearner, LearnParamsConfig, TargetMetric,
    TrainConfig,
};
use trendlearner::regression::{regression_comparison, RegressionConfig};
use trendlearner::synth::{generate_synthetic, SyntheticConfig};
use trendlearner::ugc::UGCObject;

#[derive(Parser)]
#[command(name = "trendlearner", version, about = "Popularity trend extraction and early prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster training series into trend archetypes, selecting the
    /// cluster count from the beta_cv curve.
    ExtractTrends {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 15)]
        k_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn per-class confidence and monitoring-period thresholds.
    LearnParams {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        trends: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        target_macro_f1: f64,
        /// Gate the sweep on micro instead of macro F1.
        #[arg(long, default_value_t = false)]
        micro: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the TrendLearner ensemble.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        trends: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monitor objects and emit per-object labels and probabilities.
    Predict {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against ground truth.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Trend model used to derive truth labels when the dataset
        /// carries no template labels.
        #[arg(long)]
        trends: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare general and trend-specialized regression models.
    Regress {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Held-out evaluation set; defaults to --input (in-sample).
        #[arg(long)]
        eval_input: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 7, 15])]
        deltas: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a labeled synthetic dataset.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}{suffix}"))
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// Truth labels for evaluation: generator template labels when every
/// object has one, otherwise nearest-centroid assignment of the full
/// series against a trend model.
fn derive_truth(objects: &[UGCObject], trends: Option<&ClusterModel>) -> Result<Vec<usize>, Error> {
    if objects.iter().all(|o| o.template_label.is_some()) {
        return Ok(objects.iter().map(|o| o.template_label.unwrap()).collect());
    }
    let model = trends.ok_or_else(|| {
        Error::Config(
            "dataset has no template labels; pass --trends to derive truth from centroids".into(),
        )
    })?;
    let series: Vec<_> = objects.iter().map(|o| o.views.clone()).collect();
    assign_clusters(&series, &model.centroids)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::ExtractTrends { input, k_max, seed, out } => {
            let manifest = load_dataset(&input)?;
            print_warnings(&manifest.warnings);
            let series: Vec<_> = manifest.objects.iter().map(|o| o.views.clone()).collect();
            let model = extract_trends(
                &series,
                k_max,
                DEFAULT_STABILITY_TOL,
                DEFAULT_STABILITY_WINDOW,
                seed,
            )?;
            save_cluster_model(&model, &out)?;
            let curve_path = sibling(&out, ".beta_cv.csv");
            write_beta_cv_csv(&model.beta_cv_curve, &curve_path)?;
            println!("extracted {} trends -> {} (curve: {})", model.k, out.display(), curve_path.display());
        }
        Command::LearnParams { input, trends, target_macro_f1, micro, out } => {
            let manifest = load_dataset(&input)?;
            print_warnings(&manifest.warnings);
            let mut model = load_cluster_model(&trends)?;
            let series: Vec<_> = manifest.objects.iter().map(|o| o.views.clone()).collect();
            model.assignments = assign_clusters(&series, &model.centroids)?;
            let cfg = LearnParamsConfig {
                target_f1: target_macro_f1,
                metric: if micro { TargetMetric::MicroF1 } else { TargetMetric::MacroF1 },
                gamma_max: None,
            };
            let params = learn_params(&manifest.objects, &model, &cfg)?;
            for (class, warned) in params.warned.iter().enumerate() {
                if *warned {
                    eprintln!(
                        "warning: class {class} never reached the performance target; gamma falls back to {}",
                        params.gamma_max
                    );
                }
            }
            save_monitor_params(&params, &out)?;
            println!("learned theta {:?} gamma {:?} -> {}", params.theta, params.gamma, out.display());
        }
        Command::Train { input, trends, params, seed, out } => {
            let manifest = load_dataset(&input)?;
            print_warnings(&manifest.warnings);
            let mut model = load_cluster_model(&trends)?;
            let series: Vec<_> = manifest.objects.iter().map(|o| o.views.clone()).collect();
            model.assignments = assign_clusters(&series, &model.centroids)?;
            let monitor_params = load_monitor_params(&params)?;
            let trained = train_trendlearner(
                &manifest.objects,
                &model,
                &monitor_params,
                &TrainConfig::default(),
                seed,
            )?;
            save_trendlearner_model(&trained, &out)?;
            println!("trained ensemble ({} features) -> {}", trained.feature_layout.len(), out.display());
        }
        Command::Predict { input, model, out } => {
            let manifest = load_dataset(&input)?;
            print_warnings(&manifest.warnings);
            let model = load_trendlearner_model(&model)?;
            let predictions = predict_trendlearner(&manifest.objects, &model)?;
            let records: Vec<PredictionRecord> = (0..manifest.objects.len())
                .map(|i| PredictionRecord {
                    object_id: predictions.object_ids[i].clone(),
                    t: predictions.t[i],
                    label: predictions.labels[i],
                    probs: predictions.probs.probs[i].clone(),
                    decided: predictions.probs.decided[i],
                })
                .collect();
            write_predictions_csv(&records, &out)?;
            let decided = records.iter().filter(|r| r.decided).count();
            println!(
                "predicted {} objects ({} decided within gamma_max) -> {}",
                records.len(),
                decided,
                out.display()
            );
        }
        Command::Evaluate { predictions, truth, trends, out } => {
            let records = read_predictions_csv(&predictions)?;
            let manifest = load_dataset(&truth)?;
            print_warnings(&manifest.warnings);
            let trend_model = trends.map(|p| load_cluster_model(&p)).transpose()?;
            let truth_labels = derive_truth(&manifest.objects, trend_model.as_ref())?;

            let by_id: std::collections::HashMap<&str, usize> = manifest
                .objects
                .iter()
                .enumerate()
                .map(|(i, o)| (o.object_id.as_str(), i))
                .collect();
            let k = records.first().map_or(0, |r| r.probs.len()).max(
                truth_labels.iter().max().map_or(0, |m| m + 1),
            );
            let mut truth_vec = Vec::with_capacity(records.len());
            let mut pred_vec = Vec::with_capacity(records.len());
            let mut ri_correct = Vec::new();
            let mut ri_incorrect = Vec::new();
            let mut bias_points = Vec::new();
            let mut scatter = Vec::new();
            for r in &records {
                let idx = *by_id.get(r.object_id.as_str()).ok_or_else(|| {
                    Error::Validation(format!(
                        "prediction for unknown object {}",
                        r.object_id
                    ))
                })?;
                let obj = &manifest.objects[idx];
                truth_vec.push(truth_labels[idx]);
                pred_vec.push(r.label);
                let ri = remaining_interest(&obj.views, r.t)?;
                let correct = r.label == truth_labels[idx];
                if correct {
                    ri_correct.push(ri);
                    bias_points.push((obj.views.total(), ri));
                } else {
                    ri_incorrect.push(ri);
                }
                scatter.push((r.object_id.clone(), obj.views.total(), ri, correct));
            }
            let scores = f1_scores(&truth_vec, &pred_vec, k)?;
            let (pearson, spearman) = bias_correlations(&bias_points)?;
            let report = EvalReport {
                micro_f1: scores.micro_f1,
                macro_f1: scores.macro_f1,
                per_class_f1: scores.per_class_f1,
                ri_correct: ri_correct.clone(),
                ri_incorrect,
                pearson,
                spearman,
                mrse: None,
            };
            save_report(&report, &out)?;
            write_ri_ccdf_csv(&ri_correct, sibling(&out, ".ri_ccdf.csv"))?;
            write_ri_scatter_csv(&scatter, sibling(&out, ".ri_scatter.csv"))?;
            println!(
                "micro F1 {:.4}, macro F1 {:.4}, median RI (correct) {:.4} -> {}",
                report.micro_f1,
                report.macro_f1,
                report.median_ri_correct().unwrap_or(f64::NAN),
                out.display()
            );
        }
        Command::Regress { input, model, eval_input, deltas, seed, out } => {
            if deltas.is_empty() {
                return Err(Error::Config("at least one delta is required".into()));
            }
            let train_manifest = load_dataset(&input)?;
            print_warnings(&train_manifest.warnings);
            let model = load_trendlearner_model(&model)?;
            let train_preds = predict_trendlearner(&train_manifest.objects, &model)?;

            let (test_objects, test_preds) = match eval_input {
                Some(path) => {
                    let m = load_dataset(&path)?;
                    print_warnings(&m.warnings);
                    let p = predict_trendlearner(&m.objects, &model)?;
                    (m.objects, p)
                }
                None => {
                    eprintln!("warning: evaluating on the training input (no --eval-input given)");
                    (train_manifest.objects.clone(), train_preds.clone())
                }
            };

            let cfg = RegressionConfig { seed, ..RegressionConfig::default() };
            let rows = regression_comparison(
                &train_manifest.objects,
                &train_preds.labels,
                &train_preds.t,
                &test_objects,
                &test_preds.labels,
                &test_preds.t,
                &deltas,
                &cfg,
            )?;
            let with_ci: Vec<_> = rows.into_iter().map(|r| (r, None)).collect();
            write_mrse_csv(&with_ci, &out)?;
            println!("wrote mRSE table ({} rows) -> {}", with_ci.len(), out.display());
        }
        Command::Synth { config, out } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg: SyntheticConfig = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("invalid synthetic config: {e}")))?;
            let manifest = generate_synthetic(&cfg)?;
            save_dataset(&manifest.objects, &out)?;
            let mut counts = [0usize; 4];
            for obj in &manifest.objects {
                counts[obj.template_label.unwrap_or(0)] += 1;
            }
            println!(
                "generated {} objects (template counts {:?}) -> {}",
                manifest.objects.len(),
                counts,
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.category() {
                ErrorCategory::Validation => ExitCode::from(1),
                ErrorCategory::Configuration => ExitCode::from(2),
                ErrorCategory::Internal => ExitCode::from(3),
            }
        }
    }
}

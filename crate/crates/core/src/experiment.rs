//! Seeded k-fold experiment harness: trend extraction, parameter
//! learning, ensemble training, prediction, and evaluation per fold, with
//! mean and confidence-interval aggregation across folds.

use serde::Serialize;

use crate::cluster::{extract_trends, ksc_cluster, DEFAULT_STABILITY_TOL, DEFAULT_STABILITY_WINDOW};
use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use crate::forest::mix_seed;
use crate::metrics::{bias_correlations, f1_scores, mean_ci, remaining_interest, EvalReport};
use crate::pipeline::{
    baselines_with_probs, learn_params, monitor_objects, predict_with_probs,
    train_trendlearner_full, truth_labels, LearnParamsConfig, TrainConfig,
};
use crate::regression::{regression_comparison, MrseRow, RegressionConfig};
use crate::ugc::UGCObject;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub folds: usize,
    pub seed: u64,
    /// Fixed cluster count, or `None` to select it via the beta_cv curve
    /// up to `k_max`.
    pub k: Option<usize>,
    pub k_max: usize,
    pub learn: LearnParamsConfig,
    pub train: TrainConfig,
    /// Regression lags; leave empty to skip the regression comparison.
    pub deltas: Vec<usize>,
    pub regression: RegressionConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 0,
            k: Some(4),
            k_max: 15,
            learn: LearnParamsConfig::default(),
            train: TrainConfig::default(),
            deltas: Vec::new(),
            regression: RegressionConfig::default(),
        }
    }
}

/// Micro/Macro F1 of one strategy over the objects it actually labeled.
#[derive(Debug, Clone, Serialize)]
pub struct StrategySummary {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub n_evaluated: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub trendlearner: EvalReport,
    pub p_only: StrategySummary,
    pub p_forest: StrategySummary,
    pub feature_forest: StrategySummary,
    pub mrse_rows: Vec<MrseRow>,
}

/// Aggregated metric: name, per-fold mean, 95% CI half-width.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateMetric {
    pub name: String,
    pub mean: f64,
    pub ci_halfwidth: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub folds: Vec<FoldReport>,
    pub aggregates: Vec<AggregateMetric>,
}

/// Seeded fold assignment: shuffled indices striped across folds, so fold
/// sizes differ by at most one and each object lands in exactly one test
/// fold.
pub fn fold_assignments(count: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config("experiments need at least 2 folds".into()));
    }
    if count < folds {
        return Err(Error::InsufficientData(format!(
            "{count} objects cannot fill {folds} folds"
        )));
    }
    use rand::{Rng, SeedableRng};
    let mut order: Vec<usize> = (0..count).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut assignment = vec![0usize; count];
    for (pos, idx) in order.into_iter().enumerate() {
        assignment[idx] = pos % folds;
    }
    Ok(assignment)
}

fn filtered_f1(
    truth: &[usize],
    predicted: &[Option<usize>],
    k: usize,
) -> Result<StrategySummary> {
    let mut t = Vec::new();
    let mut p = Vec::new();
    for (ti, pi) in truth.iter().zip(predicted) {
        if let Some(pi) = pi {
            t.push(*ti);
            p.push(*pi);
        }
    }
    if t.is_empty() {
        return Ok(StrategySummary { micro_f1: 0.0, macro_f1: 0.0, n_evaluated: 0 });
    }
    let scores = f1_scores(&t, &p, k)?;
    Ok(StrategySummary {
        micro_f1: scores.micro_f1,
        macro_f1: scores.macro_f1,
        n_evaluated: t.len(),
    })
}

/// Runs the full protocol on one train/test split and reports every
/// strategy. Exposed separately so callers with a pre-made split (e.g.
/// the acceptance benchmark) can reuse it.
pub fn run_split(
    train: &[UGCObject],
    test: &[UGCObject],
    fold: usize,
    cfg: &ExperimentConfig,
    fold_seed: u64,
) -> Result<FoldReport> {
    let train_series: Vec<crate::series::TimeSeries> =
        train.iter().map(|o| o.views.clone()).collect();
    let cluster_model = match cfg.k {
        Some(k) => ksc_cluster(&train_series, k, fold_seed)?,
        None => extract_trends(
            &train_series,
            cfg.k_max,
            DEFAULT_STABILITY_TOL,
            DEFAULT_STABILITY_WINDOW,
            fold_seed,
        )?,
    };
    let k = cluster_model.k;

    let params = learn_params(train, &cluster_model, &cfg.learn)?;
    let (model, train_probs) =
        train_trendlearner_full(train, &cluster_model, &params, &cfg.train, fold_seed)?;

    let truth = truth_labels(test, &cluster_model)?;
    let test_probs = monitor_objects(test, &cluster_model, &params)?;
    let labels = predict_with_probs(&model, test, &test_probs)?;
    let baselines = baselines_with_probs(&model, test, &test_probs)?;

    let scores = f1_scores(&truth, &labels, k)?;
    let mut ri_correct = Vec::new();
    let mut ri_incorrect = Vec::new();
    let mut bias_points = Vec::new();
    for (i, obj) in test.iter().enumerate() {
        let ri = remaining_interest(&obj.views, test_probs.t[i])?;
        if labels[i] == truth[i] {
            ri_correct.push(ri);
            bias_points.push((obj.views.total(), ri));
        } else {
            ri_incorrect.push(ri);
        }
    }
    let (pearson, spearman) = bias_correlations(&bias_points)?;
    let trendlearner = EvalReport {
        micro_f1: scores.micro_f1,
        macro_f1: scores.macro_f1,
        per_class_f1: scores.per_class_f1,
        ri_correct,
        ri_incorrect,
        pearson,
        spearman,
        mrse: None,
    };

    let p_only = filtered_f1(&truth, &baselines.p_only, k)?;
    let p_forest = filtered_f1(&truth, &baselines.p_forest, k)?;
    let all_labeled: Vec<Option<usize>> =
        baselines.feature_forest.iter().map(|l| Some(*l)).collect();
    let feature_forest = filtered_f1(&truth, &all_labeled, k)?;

    let mrse_rows = if cfg.deltas.is_empty() {
        Vec::new()
    } else {
        let train_pred = predict_with_probs(&model, train, &train_probs)?;
        regression_comparison(
            train,
            &train_pred,
            &train_probs.t,
            test,
            &labels,
            &test_probs.t,
            &cfg.deltas,
            &cfg.regression,
        )?
    };

    Ok(FoldReport { fold, trendlearner, p_only, p_forest, feature_forest, mrse_rows })
}

fn aggregate(folds: &[FoldReport]) -> Vec<AggregateMetric> {
    let mut metrics: Vec<(String, Vec<f64>)> = Vec::new();
    let mut push = |name: &str, value: f64| {
        if let Some((_, values)) = metrics.iter_mut().find(|(n, _)| n == name) {
            values.push(value);
        } else {
            metrics.push((name.to_string(), vec![value]));
        }
    };
    for fold in folds {
        push("trendlearner_micro_f1", fold.trendlearner.micro_f1);
        push("trendlearner_macro_f1", fold.trendlearner.macro_f1);
        push("p_only_micro_f1", fold.p_only.micro_f1);
        push("p_forest_micro_f1", fold.p_forest.micro_f1);
        push("feature_forest_micro_f1", fold.feature_forest.micro_f1);
        push("pearson", fold.trendlearner.pearson);
        push("spearman", fold.trendlearner.spearman);
        if let Some(median) = fold.trendlearner.median_ri_correct() {
            push("median_ri_correct", median);
        }
        for row in &fold.mrse_rows {
            push(&format!("mrse_{}_delta_{}", row.strategy, row.delta), row.mrse);
        }
    }
    metrics
        .into_iter()
        .map(|(name, values)| {
            let (mean, ci_halfwidth) = mean_ci(&values);
            AggregateMetric { name, mean, ci_halfwidth }
        })
        .collect()
}

/// Random k-fold cross validation over a dataset: every fold serves as
/// the test set once.
pub fn run_experiment(
    manifest: &DatasetManifest,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    let assignment = fold_assignments(manifest.objects.len(), cfg.folds, cfg.seed)?;
    let mut folds = Vec::with_capacity(cfg.folds);
    for fold in 0..cfg.folds {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (obj, a) in manifest.objects.iter().zip(&assignment) {
            if *a == fold {
                test.push(obj.clone());
            } else {
                train.push(obj.clone());
            }
        }
        let fold_seed = mix_seed(cfg.seed, fold as u64, 0xF01d);
        folds.push(run_split(&train, &test, fold, cfg, fold_seed)?);
    }
    let aggregates = aggregate(&folds);
    Ok(ExperimentReport { folds, aggregates })
}

//! End-to-end orchestration: learn the per-class stopping parameters from
//! the training set, train the ensemble on probability rows plus object
//! features, and predict trends for monitored test objects.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{
    argmax, class_probabilities, multi_class_probs, MonitorParams, ProbabilityMatrix,
};
use crate::cluster::ClusterModel;
use crate::error::{Error, Result};
use crate::forest::{
    mix_seed, predict_label, select_n_min, train_forest, FeatureKind, FeatureVector, Forest,
};
use crate::metrics::f1_scores;
use crate::series::PopStream;
use crate::ugc::{compute_object_features, object_feature_names, object_feature_schema, UGCObject};

/// Which F1 flavor gates the per-class monitoring-period sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetMetric {
    MacroF1,
    MicroF1,
}

/// Configuration of the parameter-learning sweep.
#[derive(Debug, Clone, Copy)]
pub struct LearnParamsConfig {
    /// Performance a class must reach for its gamma to be selected.
    pub target_f1: f64,
    pub metric: TargetMetric,
    /// Maximum monitoring period; defaults to the series length.
    pub gamma_max: Option<usize>,
}

impl Default for LearnParamsConfig {
    fn default() -> Self {
        Self { target_f1: 0.5, metric: TargetMetric::MacroF1, gamma_max: None }
    }
}

/// Ensemble configuration for TrendLearner training.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub m_trees: usize,
    /// Feature-subset strength; defaults to round(sqrt(arity)).
    pub k_features: Option<usize>,
    /// Leaf smoothing size; `None` selects it by cross-validation over
    /// `n_min_candidates`.
    pub n_min: Option<usize>,
    pub n_min_candidates: Vec<usize>,
    pub n_min_folds: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            m_trees: 20,
            k_features: None,
            n_min: None,
            n_min_candidates: vec![1, 2, 4, 8, 16, 32],
            n_min_folds: 5,
        }
    }
}

/// The full trained pipeline. The two baseline forests back the
/// probabilities-only and object-features-only comparison strategies and
/// share the monitoring output with the main ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendLearnerModel {
    pub cluster_model: ClusterModel,
    pub params: MonitorParams,
    pub forest: Forest,
    pub prob_only_forest: Forest,
    pub feature_only_forest: Forest,
    pub feature_layout: Vec<String>,
}

/// Prediction output for a batch of objects.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelinePredictions {
    pub object_ids: Vec<String>,
    pub t: Vec<usize>,
    pub labels: Vec<usize>,
    pub probs: ProbabilityMatrix,
}

/// Labels from the three comparison strategies, under the same per-object
/// monitoring periods as TrendLearner. Probability-based strategies
/// abstain (`None`) on objects whose monitoring never committed.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselinePredictions {
    pub p_only: Vec<Option<usize>>,
    pub p_forest: Vec<Option<usize>>,
    pub feature_forest: Vec<usize>,
}

fn prefix_of(obj: &UGCObject, t_r: usize) -> &[f64] {
    &obj.views.values()[..t_r]
}

fn score_of(truth: &[usize], predicted: &[usize], metric: TargetMetric) -> Result<f64> {
    let scores = f1_scores(truth, predicted, 2)?;
    Ok(match metric {
        TargetMetric::MacroF1 => scores.macro_f1,
        TargetMetric::MicroF1 => scores.micro_f1,
    })
}

/// Learns per-class theta and gamma by sweeping the monitoring period.
///
/// For each class, a one-against-all classification of the training
/// objects is evaluated at every period `g = 1..=gamma_max`; the smallest
/// period whose score reaches the target is that class's gamma, and theta
/// becomes the mean normalized probability of the class's own objects at
/// that period. Classes that never reach the target fall back to
/// `gamma = gamma_max` with a warning flag.
pub fn learn_params(
    train: &[UGCObject],
    cluster_model: &ClusterModel,
    cfg: &LearnParamsConfig,
) -> Result<MonitorParams> {
    let k = cluster_model.k;
    if k < 2 {
        return Err(Error::Config("parameter learning requires at least 2 classes".into()));
    }
    if cluster_model.assignments.len() != train.len() {
        return Err(Error::Config(format!(
            "cluster model labels {} training objects, got {}",
            cluster_model.assignments.len(),
            train.len()
        )));
    }
    if train.is_empty() {
        return Err(Error::InvalidTrainingSet("no training objects".into()));
    }
    let n = train[0].series_len();
    let gamma_max = cfg.gamma_max.unwrap_or(n);
    if gamma_max < 1 || gamma_max > n {
        return Err(Error::Config(format!(
            "gamma_max {gamma_max} outside [1, series length {n}]"
        )));
    }

    let labels = &cluster_model.assignments;
    let mut gamma = vec![gamma_max; k];
    let mut theta = vec![0.0f64; k];
    let mut warned = vec![true; k];
    let mut selected = vec![false; k];

    for g in 1..=gamma_max {
        let rows: Vec<Vec<f64>> = train
            .par_iter()
            .map(|obj| class_probabilities(prefix_of(obj, g), &cluster_model.centroids))
            .collect::<Result<_>>()?;
        let predicted: Vec<usize> = rows.iter().map(|r| argmax(r)).collect();

        let mut all_done = true;
        for class in 0..k {
            if selected[class] {
                continue;
            }
            let truth01: Vec<usize> = labels.iter().map(|l| (*l == class) as usize).collect();
            let pred01: Vec<usize> = predicted.iter().map(|p| (*p == class) as usize).collect();
            let score = score_of(&truth01, &pred01, cfg.metric)?;
            let is_last = g == gamma_max;
            if score >= cfg.target_f1 || is_last {
                let own: Vec<f64> = rows
                    .iter()
                    .zip(labels)
                    .filter(|(_, l)| **l == class)
                    .map(|(r, _)| r[class])
                    .collect();
                let mean = if own.is_empty() {
                    0.0
                } else {
                    own.iter().sum::<f64>() / own.len() as f64
                };
                if score >= cfg.target_f1 {
                    gamma[class] = g;
                    theta[class] = mean;
                    warned[class] = false;
                    selected[class] = true;
                } else {
                    // Fallback at the end of the sweep.
                    gamma[class] = gamma_max;
                    theta[class] = mean;
                }
            }
            if !selected[class] {
                all_done = false;
            }
        }
        if all_done {
            break;
        }
    }

    let mut params = MonitorParams::new(theta, gamma, gamma_max)?;
    params.warned = warned;
    Ok(params)
}

/// Runs the monitoring loop over a batch of objects' views streams.
pub fn monitor_objects(
    objects: &[UGCObject],
    cluster_model: &ClusterModel,
    params: &MonitorParams,
) -> Result<ProbabilityMatrix> {
    let streams: Vec<PopStream> = objects
        .iter()
        .map(|o| PopStream::from_series(&o.object_id, &o.views))
        .collect();
    multi_class_probs(&streams, &cluster_model.centroids, params)
}

fn combined_feature_vector(
    obj: &UGCObject,
    prob_row: &[f64],
    t: usize,
) -> Result<FeatureVector> {
    let mut values = prob_row.to_vec();
    values.extend(compute_object_features(obj, t)?.values);
    Ok(FeatureVector::new(values))
}

fn category_arity(objects: &[UGCObject]) -> u32 {
    objects.iter().map(|o| o.category).max().map_or(1, |m| m + 1)
}

fn default_k(arity: usize) -> usize {
    ((arity as f64).sqrt().round() as usize).max(1)
}

/// Trains the TrendLearner ensemble: monitoring probabilities for the
/// training objects are concatenated with each object's features at its
/// own stopping period, and the forest learns the cluster labels. The two
/// baseline forests (probabilities only, object features only) are
/// trained alongside on the same rows.
pub fn train_trendlearner(
    train: &[UGCObject],
    cluster_model: &ClusterModel,
    params: &MonitorParams,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrendLearnerModel> {
    train_trendlearner_full(train, cluster_model, params, cfg, seed).map(|(model, _)| model)
}

/// Same as [`train_trendlearner`] but also returns the training-set
/// monitoring output, which downstream consumers (e.g. regression
/// specialization) need without paying for a second monitoring pass.
pub fn train_trendlearner_full(
    train: &[UGCObject],
    cluster_model: &ClusterModel,
    params: &MonitorParams,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(TrendLearnerModel, ProbabilityMatrix)> {
    let k = cluster_model.k;
    if cluster_model.assignments.len() != train.len() {
        return Err(Error::Config(format!(
            "cluster model labels {} training objects, got {}",
            cluster_model.assignments.len(),
            train.len()
        )));
    }
    let labels = &cluster_model.assignments;
    let probs = monitor_objects(train, cluster_model, params)?;

    let mut combined = Vec::with_capacity(train.len());
    let mut prob_rows = Vec::with_capacity(train.len());
    let mut object_rows = Vec::with_capacity(train.len());
    for (i, obj) in train.iter().enumerate() {
        combined.push(combined_feature_vector(obj, &probs.probs[i], probs.t[i])?);
        prob_rows.push(FeatureVector::new(probs.probs[i].clone()));
        object_rows.push(FeatureVector::new(
            compute_object_features(obj, probs.t[i])?.values,
        ));
    }

    let arity = category_arity(train);
    let object_schema = object_feature_schema(arity);
    let mut combined_schema = vec![FeatureKind::Numeric; k];
    combined_schema.extend(object_schema.iter().cloned());

    let k_combined = cfg.k_features.unwrap_or_else(|| default_k(combined_schema.len()));
    let n_min = match cfg.n_min {
        Some(v) => v,
        None => select_n_min(
            &combined,
            labels,
            &combined_schema,
            k,
            &cfg.n_min_candidates,
            cfg.n_min_folds,
            cfg.m_trees,
            k_combined,
            mix_seed(seed, 0xCF, 0),
        )?,
    };

    let forest = train_forest(
        &combined,
        labels,
        &combined_schema,
        k,
        cfg.m_trees,
        k_combined,
        n_min,
        mix_seed(seed, 1, 0),
    )?;
    let prob_only_forest = train_forest(
        &prob_rows,
        labels,
        &vec![FeatureKind::Numeric; k],
        k,
        cfg.m_trees,
        default_k(k),
        n_min,
        mix_seed(seed, 2, 0),
    )?;
    let feature_only_forest = train_forest(
        &object_rows,
        labels,
        &object_schema,
        k,
        cfg.m_trees,
        default_k(object_schema.len()),
        n_min,
        mix_seed(seed, 3, 0),
    )?;

    let mut feature_layout: Vec<String> = (0..k).map(|c| format!("prob_class_{c}")).collect();
    feature_layout.extend(object_feature_names());

    let model = TrendLearnerModel {
        cluster_model: cluster_model.clone(),
        params: params.clone(),
        forest,
        prob_only_forest,
        feature_only_forest,
        feature_layout,
    };
    Ok((model, probs))
}

/// TrendLearner labels for objects with a precomputed monitoring output.
/// Undecided objects keep their all-zero probability features and are
/// still labeled from the object features at `t = gamma_max`.
pub fn predict_with_probs(
    model: &TrendLearnerModel,
    objects: &[UGCObject],
    probs: &ProbabilityMatrix,
) -> Result<Vec<usize>> {
    objects
        .iter()
        .enumerate()
        .map(|(i, obj)| {
            let x = combined_feature_vector(obj, &probs.probs[i], probs.t[i])?;
            predict_label(&model.forest, &x)
        })
        .collect()
}

/// Full prediction pass: monitor every object, then label it.
pub fn predict_trendlearner(
    test: &[UGCObject],
    model: &TrendLearnerModel,
) -> Result<PipelinePredictions> {
    let probs = monitor_objects(test, &model.cluster_model, &model.params)?;
    let labels = predict_with_probs(model, test, &probs)?;
    Ok(PipelinePredictions {
        object_ids: test.iter().map(|o| o.object_id.clone()).collect(),
        t: probs.t.clone(),
        labels,
        probs,
    })
}

/// Labels from the three comparison strategies given a precomputed
/// monitoring output.
pub fn baselines_with_probs(
    model: &TrendLearnerModel,
    objects: &[UGCObject],
    probs: &ProbabilityMatrix,
) -> Result<BaselinePredictions> {
    let mut p_only = Vec::with_capacity(objects.len());
    let mut p_forest = Vec::with_capacity(objects.len());
    let mut feature_forest = Vec::with_capacity(objects.len());
    for (i, obj) in objects.iter().enumerate() {
        if probs.decided[i] {
            p_only.push(Some(argmax(&probs.probs[i])));
            let x = FeatureVector::new(probs.probs[i].clone());
            p_forest.push(Some(predict_label(&model.prob_only_forest, &x)?));
        } else {
            p_only.push(None);
            p_forest.push(None);
        }
        let x = FeatureVector::new(compute_object_features(obj, probs.t[i])?.values);
        feature_forest.push(predict_label(&model.feature_only_forest, &x)?);
    }
    Ok(BaselinePredictions { p_only, p_forest, feature_forest })
}

/// Monitoring plus the three baseline strategies in one call.
pub fn baseline_predictors(
    test: &[UGCObject],
    model: &TrendLearnerModel,
) -> Result<BaselinePredictions> {
    let probs = monitor_objects(test, &model.cluster_model, &model.params)?;
    baselines_with_probs(model, test, &probs)
}

/// Ground-truth trend labels for evaluation: each object's full series
/// assigned to the nearest extracted centroid.
pub fn truth_labels(objects: &[UGCObject], cluster_model: &ClusterModel) -> Result<Vec<usize>> {
    let series: Vec<crate::series::TimeSeries> =
        objects.iter().map(|o| o.views.clone()).collect();
    crate::cluster::assign_clusters(&series, &cluster_model.centroids)
}

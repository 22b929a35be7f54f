//! Popularity regression at a future date: a multivariate linear model on
//! per-window views (ML) and its extension with radial-basis similarity
//! features to selected training examples (MRBF), fit by weighted least
//! squares on relative error so training matches the mRSE metric.
//!
//! Specialized variants train one model per (predicted trend, monitoring
//! period) group, falling back to the general model for sparse groups.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::mrse;
use crate::series::TimeSeries;
use crate::ugc::UGCObject;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Ml,
    Mrbf,
}

/// A fitted model predicting cumulative views at `t_r + delta` from the
/// first `t_r` windows.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    pub kind: ModelKind,
    pub reference_windows: usize,
    pub delta: usize,
    /// Per-window weights, followed by per-example RBF weights for MRBF.
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Example prefixes the RBF features compare against (MRBF only).
    pub rbf_examples: Vec<Vec<f64>>,
    pub rbf_sigma: Option<f64>,
}

const RIDGE_EPSILON: f64 = 1e-8;

/// Solves the relative-error least squares: rows are scaled by `1/y`, so
/// the objective is `sum ((w.x + b) / y - 1)^2`. The solve goes through
/// an SVD so collinear columns (flat series, saturated RBF features)
/// resolve to the minimum-norm minimizer instead of blowing up; if that
/// fails, the normal equations are retried with a ridge of 1e-8.
fn solve_relative_wls(rows: &[Vec<f64>], targets: &[f64]) -> Result<Vec<f64>> {
    let n = rows.len();
    let p = rows[0].len();
    let mut design = DMatrix::<f64>::zeros(n, p);
    for (i, (row, y)) in rows.iter().zip(targets).enumerate() {
        for j in 0..p {
            design[(i, j)] = row[j] / y;
        }
    }
    let ones = DVector::from_element(n, 1.0);

    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if max_sv > 0.0 {
        if let Ok(solution) = svd.solve(&ones, max_sv * 1e-12) {
            if solution.iter().all(|v| v.is_finite()) {
                return Ok(solution.iter().cloned().collect());
            }
        }
    }

    // Ridge fallback on the normal equations.
    let gram = design.transpose() * &design;
    let rhs = design.transpose() * ones;
    let mut ridged = gram;
    for i in 0..p {
        ridged[(i, i)] += RIDGE_EPSILON;
    }
    match Cholesky::new(ridged) {
        Some(chol) => Ok(chol.solve(&rhs).iter().cloned().collect()),
        None => Err(Error::RankDeficient),
    }
}

fn validate_training(series: &[&TimeSeries], t_r: usize, delta: usize) -> Result<usize> {
    if series.is_empty() {
        return Err(Error::InvalidTrainingSet("no training series".into()));
    }
    let n = series[0].len();
    if t_r < 1 {
        return Err(Error::InvalidPeriod(t_r));
    }
    if t_r + delta > n {
        return Err(Error::Config(format!(
            "reference {t_r} plus lag {delta} exceeds the series length {n}"
        )));
    }
    for s in series {
        if s.len() != n {
            return Err(Error::LengthMismatch { left: n, right: s.len() });
        }
        if !(s.cumulative(t_r + delta) > 0.0) {
            return Err(Error::InvalidTarget(format!(
                "cumulative views at window {} must be positive",
                t_r + delta
            )));
        }
    }
    Ok(n)
}

/// Trains the multivariate linear model.
pub fn train_ml(series: &[&TimeSeries], t_r: usize, delta: usize) -> Result<RegressionModel> {
    validate_training(series, t_r, delta)?;
    let rows: Vec<Vec<f64>> = series
        .iter()
        .map(|s| {
            let mut row = s.values()[..t_r].to_vec();
            row.push(1.0);
            row
        })
        .collect();
    let targets: Vec<f64> = series.iter().map(|s| s.cumulative(t_r + delta)).collect();
    let mut solution = solve_relative_wls(&rows, &targets)?;
    let intercept = solution.pop().expect("intercept column");
    Ok(RegressionModel {
        kind: ModelKind::Ml,
        reference_windows: t_r,
        delta,
        weights: solution,
        intercept,
        rbf_examples: Vec::new(),
        rbf_sigma: None,
    })
}

fn rbf_feature(prefix: &[f64], example: &[f64], sigma: f64) -> f64 {
    let d2: f64 = prefix.iter().zip(example).map(|(a, b)| (a - b).powi(2)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

fn median_pairwise_distance(prefixes: &[Vec<f64>]) -> f64 {
    // Cap the quadratic pass on large training sets.
    let cap = prefixes.len().min(300);
    let mut dists = Vec::new();
    for i in 0..cap {
        for j in (i + 1)..cap {
            let d2: f64 = prefixes[i]
                .iter()
                .zip(&prefixes[j])
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            dists.push(d2.sqrt());
        }
    }
    crate::metrics::median(&dists).unwrap_or(0.0)
}

fn assemble_mrbf_rows(
    prefixes: &[Vec<f64>],
    examples: &[Vec<f64>],
    sigma: f64,
) -> Vec<Vec<f64>> {
    prefixes
        .iter()
        .map(|p| {
            let mut row = p.clone();
            for e in examples {
                row.push(rbf_feature(p, e, sigma));
            }
            row.push(1.0);
            row
        })
        .collect()
}

fn fit_mrbf_at_sigma(
    prefixes: &[Vec<f64>],
    targets: &[f64],
    examples: &[Vec<f64>],
    sigma: f64,
    t_r: usize,
    delta: usize,
) -> Result<RegressionModel> {
    let rows = assemble_mrbf_rows(prefixes, examples, sigma);
    let mut solution = solve_relative_wls(&rows, targets)?;
    let intercept = solution.pop().expect("intercept column");
    Ok(RegressionModel {
        kind: ModelKind::Mrbf,
        reference_windows: t_r,
        delta,
        weights: solution,
        intercept,
        rbf_examples: examples.to_vec(),
        rbf_sigma: Some(sigma),
    })
}

/// Trains the RBF-augmented model. `n_examples` training prefixes are
/// chosen uniformly at random (seeded); the kernel width is selected by
/// cross-validation over a geometric grid centered at the median pairwise
/// prefix distance.
pub fn train_mrbf(
    series: &[&TimeSeries],
    t_r: usize,
    delta: usize,
    n_examples: usize,
    seed: u64,
) -> Result<RegressionModel> {
    validate_training(series, t_r, delta)?;
    if n_examples > series.len() {
        return Err(Error::Config(format!(
            "{n_examples} RBF examples requested from {} series",
            series.len()
        )));
    }
    if n_examples == 0 {
        let mut model = train_ml(series, t_r, delta)?;
        model.kind = ModelKind::Mrbf;
        return Ok(model);
    }

    let prefixes: Vec<Vec<f64>> = series.iter().map(|s| s.values()[..t_r].to_vec()).collect();
    let targets: Vec<f64> = series.iter().map(|s| s.cumulative(t_r + delta)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let examples: Vec<Vec<f64>> = rand::seq::index::sample(&mut rng, series.len(), n_examples)
        .iter()
        .map(|i| prefixes[i].clone())
        .collect();

    let med = median_pairwise_distance(&prefixes);
    if med == 0.0 {
        return fit_mrbf_at_sigma(&prefixes, &targets, &examples, 1.0, t_r, delta);
    }
    let grid: Vec<f64> = [0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0].iter().map(|f| f * med).collect();

    let folds = 5usize;
    if prefixes.len() < 2 * folds {
        return fit_mrbf_at_sigma(&prefixes, &targets, &examples, med, t_r, delta);
    }
    let mut best: Option<(f64, f64)> = None;
    for sigma in grid {
        let mut fold_errors = Vec::with_capacity(folds);
        for fold in 0..folds {
            let (mut tr_p, mut tr_y, mut va_p, mut va_y) =
                (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for (i, (p, y)) in prefixes.iter().zip(&targets).enumerate() {
                if i % folds == fold {
                    va_p.push(p.clone());
                    va_y.push(*y);
                } else {
                    tr_p.push(p.clone());
                    tr_y.push(*y);
                }
            }
            let model = fit_mrbf_at_sigma(&tr_p, &tr_y, &examples, sigma, t_r, delta)?;
            let predicted: Vec<f64> =
                va_p.iter().map(|p| predict_from_prefix(&model, p)).collect::<Result<_>>()?;
            fold_errors.push(mrse(&predicted, &va_y)?);
        }
        let mean = fold_errors.iter().sum::<f64>() / fold_errors.len() as f64;
        if best.as_ref().is_none_or(|(b, _)| mean < *b) {
            best = Some((mean, sigma));
        }
    }
    let sigma = best.expect("non-empty grid").1;
    fit_mrbf_at_sigma(&prefixes, &targets, &examples, sigma, t_r, delta)
}

fn predict_from_prefix(model: &RegressionModel, prefix: &[f64]) -> Result<f64> {
    if prefix.len() != model.reference_windows {
        return Err(Error::InvalidInput(format!(
            "prefix has {} windows, model expects {}",
            prefix.len(),
            model.reference_windows
        )));
    }
    let mut features: Vec<f64> = prefix.to_vec();
    if let Some(sigma) = model.rbf_sigma {
        for e in &model.rbf_examples {
            features.push(rbf_feature(prefix, e, sigma));
        }
    }
    if features.len() != model.weights.len() {
        return Err(Error::InvalidInput(format!(
            "model has {} weights for {} features",
            model.weights.len(),
            features.len()
        )));
    }
    let raw: f64 = model
        .weights
        .iter()
        .zip(&features)
        .map(|(w, x)| w * x)
        .sum::<f64>()
        + model.intercept;
    Ok(raw.max(0.0))
}

/// Predicted cumulative views at the model's target date, clamped below
/// at zero.
pub fn predict_popularity(model: &RegressionModel, prefix: &[f64]) -> Result<f64> {
    predict_from_prefix(model, prefix)
}

#[derive(Debug, Clone, Copy)]
pub struct RegressionConfig {
    pub kind: ModelKind,
    /// Minimum group size before a (class, t) bucket gets its own model.
    pub min_samples: usize,
    /// RBF example count (MRBF only).
    pub n_examples: usize,
    pub seed: u64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self { kind: ModelKind::Ml, min_samples: 10, n_examples: 50, seed: 0 }
    }
}

/// Per-(predicted class, monitoring period) models with general fallbacks
/// per period.
#[derive(Debug, Clone)]
pub struct SpecializedBundle {
    pub kind: ModelKind,
    pub delta: usize,
    pub min_samples: usize,
    pub models: BTreeMap<(usize, usize), RegressionModel>,
    pub fallback: GeneralModels,
}

/// The unspecialized model family: one model per monitoring period,
/// trained on the whole training set.
#[derive(Debug, Clone, Default)]
pub struct GeneralModels {
    pub delta: usize,
    pub by_t: BTreeMap<usize, RegressionModel>,
}

fn fit_at(
    series: &[&TimeSeries],
    t_r: usize,
    delta: usize,
    cfg: &RegressionConfig,
) -> Result<RegressionModel> {
    match cfg.kind {
        ModelKind::Ml => train_ml(series, t_r, delta),
        ModelKind::Mrbf => {
            train_mrbf(series, t_r, delta, cfg.n_examples.min(series.len()), cfg.seed)
        }
    }
}

/// Training series usable at reference `t_r`: long enough and with a
/// positive target.
fn usable<'a>(objects: &'a [UGCObject], t_r: usize, delta: usize) -> Vec<&'a TimeSeries> {
    objects
        .iter()
        .map(|o| &o.views)
        .filter(|s| t_r + delta <= s.len() && s.cumulative(t_r + delta) > 0.0)
        .collect()
}

/// Trains the general model family at every period in `t_values` that is
/// feasible for the lag.
pub fn train_general(
    objects: &[UGCObject],
    t_values: &[usize],
    delta: usize,
    cfg: &RegressionConfig,
) -> Result<GeneralModels> {
    let mut by_t = BTreeMap::new();
    let mut distinct: Vec<usize> = t_values.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    for t_r in distinct {
        let series = usable(objects, t_r, delta);
        if series.is_empty() {
            continue;
        }
        by_t.insert(t_r, fit_at(&series, t_r, delta, cfg)?);
    }
    Ok(GeneralModels { delta, by_t })
}

/// Trains specialized models for every (predicted class, period) group
/// with at least `min_samples` usable members; smaller groups resolve to
/// the general fallback at prediction time.
pub fn train_specialized(
    objects: &[UGCObject],
    labels: &[usize],
    t: &[usize],
    delta: usize,
    cfg: &RegressionConfig,
) -> Result<SpecializedBundle> {
    if objects.len() != labels.len() || objects.len() != t.len() {
        return Err(Error::Config(format!(
            "objects ({}), labels ({}) and t ({}) must align",
            objects.len(),
            labels.len(),
            t.len()
        )));
    }
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, (label, t_i)) in labels.iter().zip(t).enumerate() {
        groups.entry((*label, *t_i)).or_default().push(i);
    }

    let mut models = BTreeMap::new();
    for ((label, t_r), members) in &groups {
        if *t_r + delta > objects[0].series_len() {
            continue;
        }
        let series: Vec<&TimeSeries> = members
            .iter()
            .map(|i| &objects[*i].views)
            .filter(|s| s.cumulative(t_r + delta) > 0.0)
            .collect();
        if series.len() < cfg.min_samples {
            continue;
        }
        models.insert((*label, *t_r), fit_at(&series, *t_r, delta, cfg)?);
    }

    let t_values: Vec<usize> = t.to_vec();
    let fallback = train_general(objects, &t_values, delta, cfg)?;
    Ok(SpecializedBundle { kind: cfg.kind, delta, min_samples: cfg.min_samples, models, fallback })
}

/// One row of the mRSE comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrseRow {
    pub strategy: String,
    pub delta: usize,
    pub mrse: f64,
    pub n_objects: usize,
}

/// Evaluates the specialized bundle against the general family on the
/// same test objects: each object is predicted at its own monitoring
/// period, and objects whose target window falls past the series end (or
/// that no general model covers) are excluded from both averages.
pub fn evaluate_regression(
    bundle: &SpecializedBundle,
    general: &GeneralModels,
    test: &[UGCObject],
    labels: &[usize],
    t: &[usize],
) -> Result<(MrseRow, MrseRow)> {
    let delta = bundle.delta;
    let mut spec_pred = Vec::new();
    let mut gen_pred = Vec::new();
    let mut actuals = Vec::new();
    for (i, obj) in test.iter().enumerate() {
        let t_i = t[i];
        if t_i + delta > obj.series_len() {
            continue;
        }
        let actual = obj.views.cumulative(t_i + delta);
        if !(actual > 0.0) {
            continue;
        }
        let Some(gen_model) = general.by_t.get(&t_i) else { continue };
        let spec_model = bundle
            .models
            .get(&(labels[i], t_i))
            .or_else(|| bundle.fallback.by_t.get(&t_i));
        let Some(spec_model) = spec_model else { continue };
        let prefix = &obj.views.values()[..t_i];
        spec_pred.push(predict_popularity(spec_model, prefix)?);
        gen_pred.push(predict_popularity(gen_model, prefix)?);
        actuals.push(actual);
    }
    if actuals.is_empty() {
        return Err(Error::InsufficientData(
            "no test object has a feasible regression target".into(),
        ));
    }
    let kind_tag = match bundle.kind {
        ModelKind::Ml => "ml",
        ModelKind::Mrbf => "mrbf",
    };
    Ok((
        MrseRow {
            strategy: format!("specialized_{kind_tag}"),
            delta,
            mrse: mrse(&spec_pred, &actuals)?,
            n_objects: actuals.len(),
        },
        MrseRow {
            strategy: format!("general_{kind_tag}"),
            delta,
            mrse: mrse(&gen_pred, &actuals)?,
            n_objects: actuals.len(),
        },
    ))
}

/// Full comparison: both model kinds, specialized and general, across the
/// requested lags.
pub fn regression_comparison(
    train: &[UGCObject],
    train_labels: &[usize],
    train_t: &[usize],
    test: &[UGCObject],
    test_labels: &[usize],
    test_t: &[usize],
    deltas: &[usize],
    cfg: &RegressionConfig,
) -> Result<Vec<MrseRow>> {
    let mut rows = Vec::new();
    let mut all_t: Vec<usize> = train_t.to_vec();
    all_t.extend_from_slice(test_t);
    for &delta in deltas {
        for kind in [ModelKind::Ml, ModelKind::Mrbf] {
            let kind_cfg = RegressionConfig { kind, ..*cfg };
            let general = train_general(train, &all_t, delta, &kind_cfg)?;
            let bundle = train_specialized(train, train_labels, train_t, delta, &kind_cfg)?;
            let (spec_row, gen_row) =
                evaluate_regression(&bundle, &general, test, test_labels, test_t)?;
            rows.push(gen_row);
            rows.push(spec_row);
        }
    }
    Ok(rows)
}

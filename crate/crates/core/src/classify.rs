//! Online trend classification: class-membership probabilities for a
//! growing popularity stream, and the per-object stopping rules that
//! decide when a prediction is confident enough to commit.
//!
//! The score of a stream prefix against a class centroid is
//! `exp(-dist(prefix, slice))`, maximized over every alignment of the
//! prefix inside the centroid. Scores are normalized across all classes
//! before any confidence threshold is applied, so thresholds live on the
//! same `[0, 1]` scale as the reported probabilities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{dist_between, PopStream, TimeSeries};

/// Per-class stopping parameters: minimum confidence `theta`, minimum
/// monitoring period `gamma`, and the global cap `gamma_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorParams {
    pub theta: Vec<f64>,
    pub gamma: Vec<usize>,
    pub gamma_max: usize,
    /// Per-class flag set when parameter learning fell back to
    /// `gamma = gamma_max` because no monitoring period attained the
    /// performance target.
    pub warned: Vec<bool>,
}

impl MonitorParams {
    pub fn new(theta: Vec<f64>, gamma: Vec<usize>, gamma_max: usize) -> Result<Self> {
        if theta.len() != gamma.len() {
            return Err(Error::Config(format!(
                "theta has {} entries, gamma has {}",
                theta.len(),
                gamma.len()
            )));
        }
        if gamma_max < 1 {
            return Err(Error::Config("gamma_max must be at least 1".into()));
        }
        for t in &theta {
            if !(0.0..=1.0).contains(t) {
                return Err(Error::Config(format!("theta {t} outside [0, 1]")));
            }
        }
        for g in &gamma {
            if *g < 1 || *g > gamma_max {
                return Err(Error::Config(format!(
                    "gamma {g} outside [1, gamma_max = {gamma_max}]"
                )));
            }
        }
        let warned = vec![false; theta.len()];
        Ok(Self { theta, gamma, gamma_max, warned })
    }

    pub fn num_classes(&self) -> usize {
        self.theta.len()
    }
}

/// Per-object, per-class probabilities plus the monitoring period at which
/// each object was decided. Undecided objects keep an all-zero row and
/// `t = gamma_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    pub object_ids: Vec<String>,
    pub probs: Vec<Vec<f64>>,
    pub t: Vec<usize>,
    pub decided: Vec<bool>,
}

impl ProbabilityMatrix {
    pub fn num_objects(&self) -> usize {
        self.probs.len()
    }

    pub fn num_classes(&self) -> usize {
        self.probs.first().map_or(0, Vec::len)
    }

    /// Index of the most probable class for a decided row; `None` for
    /// undecided rows. Ties break toward the lowest class index.
    pub fn argmax(&self, object: usize) -> Option<usize> {
        if !self.decided[object] {
            return None;
        }
        Some(argmax(&self.probs[object]))
    }
}

/// Position of the largest value; ties break toward the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Unnormalized alignment score of a stream prefix against one centroid:
/// the maximum over starting windows `t_s` of `exp(-dist(prefix, slice))`.
///
/// For `t_r <= |centroid| - 1` the centroid is sliced at every
/// `t_s in 1..=|centroid| - t_r`; when the prefix has grown past that
/// range, every alignment of the whole centroid inside the prefix is
/// tried instead. `stop_at` optionally ends the scan early once the
/// running maximum reaches the given raw-scale threshold; the value
/// returned is still the maximum found so far. The scan order is
/// ascending, so results are deterministic.
pub fn align_score(prefix: &[f64], centroid: &TimeSeries, stop_at: Option<f64>) -> Result<f64> {
    let t_r = prefix.len();
    if t_r < 1 {
        return Err(Error::InvalidPeriod(0));
    }
    if prefix.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateSeries("all-zero prefix in align_score".into()));
    }
    let c = centroid.values();
    let m = c.len();
    if m < 1 {
        return Err(Error::InvalidInput("empty centroid".into()));
    }

    let mut best = f64::NEG_INFINITY;
    if t_r <= m - 1 {
        for t_s in 1..=(m - t_r) {
            let slice = &c[t_s - 1..t_s - 1 + t_r];
            let d = dist_between(prefix, slice)?.distance;
            let score = (-d).exp();
            if score > best {
                best = score;
            }
            if let Some(threshold) = stop_at {
                if best >= threshold {
                    break;
                }
            }
        }
    } else {
        // The prefix outgrew the centroid: slide the centroid inside the
        // prefix. Windows that are all zero carry no information and are
        // skipped; at least one window is non-zero because the prefix is.
        for u in 0..=(t_r - m) {
            let window = &prefix[u..u + m];
            if window.iter().all(|v| *v == 0.0) {
                continue;
            }
            let d = dist_between(window, c)?.distance;
            let score = (-d).exp();
            if score > best {
                best = score;
            }
            if let Some(threshold) = stop_at {
                if best >= threshold {
                    break;
                }
            }
        }
    }
    Ok(best)
}

/// Divides scores by their sum; an all-zero input stays all zero (the
/// undecided marker). Negative scores are rejected.
pub fn normalize_probs(scores: &[f64]) -> Result<Vec<f64>> {
    for s in scores {
        if *s < 0.0 {
            return Err(Error::InvalidScore(*s));
        }
    }
    let sum: f64 = scores.iter().sum();
    if sum == 0.0 {
        return Ok(vec![0.0; scores.len()]);
    }
    Ok(scores.iter().map(|s| s / sum).collect())
}

/// Normalized per-class probabilities of a prefix against every centroid.
/// An all-zero prefix yields an all-zero row: no alignment carries
/// information yet, so the object stays undecided at this period.
pub fn class_probabilities(prefix: &[f64], centroids: &[TimeSeries]) -> Result<Vec<f64>> {
    if prefix.iter().all(|v| *v == 0.0) {
        return Ok(vec![0.0; centroids.len()]);
    }
    let mut scores = Vec::with_capacity(centroids.len());
    for c in centroids {
        scores.push(align_score(prefix, c, None)?);
    }
    normalize_probs(&scores)
}

/// Monitors one stream for one class: starting at `t_r = gamma_i`, extends
/// the monitoring period one window at a time and stops as soon as the
/// normalized class probability reaches `theta_i`, returning
/// `(t_r, probability)`. Exhausting `gamma_max` returns `(gamma_max, 0)`.
pub fn per_class_prob(
    stream: &PopStream,
    centroids: &[TimeSeries],
    class_index: usize,
    theta_i: f64,
    gamma_i: usize,
    gamma_max: usize,
) -> Result<(usize, f64)> {
    if gamma_i < 1 || gamma_i > gamma_max {
        return Err(Error::Config(format!(
            "gamma_i {gamma_i} outside [1, gamma_max = {gamma_max}]"
        )));
    }
    if class_index >= centroids.len() {
        return Err(Error::Config(format!(
            "class index {class_index} out of range for {} centroids",
            centroids.len()
        )));
    }
    for t_r in gamma_i..=gamma_max {
        let prefix = stream.prefix(t_r)?;
        let probs = class_probabilities(prefix, centroids)?;
        let p = probs[class_index];
        if p >= theta_i {
            return Ok((t_r, p));
        }
    }
    Ok((gamma_max, 0.0))
}

/// Monitors every test stream against every class (the multi-class loop).
///
/// Starting at `t_r = min(gamma)`, each undecided object gets a normalized
/// probability row per period; the object is decided once the maximum
/// probability exceeds that class's `theta` and `t_r` has reached that
/// class's `gamma`. Decided objects record the full row and the period;
/// objects never decided keep zeros and `t = gamma_max`. Streams shorter
/// than the current period simply stay undecided.
pub fn multi_class_probs(
    test: &[PopStream],
    centroids: &[TimeSeries],
    params: &MonitorParams,
) -> Result<ProbabilityMatrix> {
    let k = centroids.len();
    if k < 2 {
        return Err(Error::Config(format!("multi_class_probs requires at least 2 classes, got {k}")));
    }
    if params.num_classes() != k {
        return Err(Error::Config(format!(
            "params cover {} classes but {} centroids were given",
            params.num_classes(),
            k
        )));
    }

    let n_objects = test.len();
    let mut matrix = ProbabilityMatrix {
        object_ids: test.iter().map(|s| s.object_id().to_string()).collect(),
        probs: vec![vec![0.0; k]; n_objects],
        t: vec![params.gamma_max; n_objects],
        decided: vec![false; n_objects],
    };
    if n_objects == 0 {
        return Ok(matrix);
    }

    let min_gamma = *params.gamma.iter().min().expect("k >= 2");
    let mut active: Vec<usize> = (0..n_objects).collect();

    for t_r in min_gamma..=params.gamma_max {
        if active.is_empty() {
            break;
        }
        let decisions: Vec<(usize, Option<Vec<f64>>)> = active
            .par_iter()
            .map(|&obj| {
                if test[obj].len() < t_r {
                    return Ok((obj, None));
                }
                let prefix = test[obj].prefix(t_r)?;
                let probs = class_probabilities(prefix, centroids)?;
                let maxc = argmax(&probs);
                let decided =
                    probs[maxc] > params.theta[maxc] && t_r >= params.gamma[maxc];
                Ok((obj, decided.then_some(probs)))
            })
            .collect::<Result<_>>()?;

        let mut still_active = Vec::with_capacity(active.len());
        for (obj, decision) in decisions {
            match decision {
                Some(probs) => {
                    matrix.probs[obj] = probs;
                    matrix.t[obj] = t_r;
                    matrix.decided[obj] = true;
                }
                None => still_active.push(obj),
            }
        }
        active = still_active;
    }
    Ok(matrix)
}

/// Normalized class probabilities computed against every member of the
/// training set instead of the centroids: the per-class score is the sum
/// over all members of that class of the best-alignment score. This is
/// the reference-set variant the centroid scoring replaces; it is slower
/// by a factor of `|train| / k`.
pub fn whole_training_probabilities(
    prefix: &[f64],
    members: &[TimeSeries],
    labels: &[usize],
    k: usize,
) -> Result<Vec<f64>> {
    if members.len() != labels.len() {
        return Err(Error::LengthMismatch { left: members.len(), right: labels.len() });
    }
    if prefix.iter().all(|v| *v == 0.0) {
        return Ok(vec![0.0; k]);
    }
    let mut scores = vec![0.0f64; k];
    for (member, label) in members.iter().zip(labels) {
        if *label >= k {
            return Err(Error::InvalidInput(format!("label {label} out of range for k = {k}")));
        }
        scores[*label] += align_score(prefix, member, None)?;
    }
    normalize_probs(&scores)
}

//! K-spectral-centroid clustering of popularity time series.
//!
//! A direct translation of k-means onto the scale/shift-invariant distance
//! of [`crate::series::dist`]: random initial assignment, centroid update,
//! nearest-centroid reassignment, repeat until no object moves. The
//! centroid of a cluster is the unit vector minimizing the summed squared
//! distance to its (shift-aligned) members, which is the eigenvector for
//! the smallest eigenvalue of `M = sum_d (I - x_d x_d^T / ||x_d||^2)`.
//!
//! Cluster-count selection uses the beta_cv quality metric: the ratio of
//! the coefficient of variation of intracluster distances to that of
//! intercluster distances, scanned for the smallest k after which the
//! curve stays roughly stable.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::{dist, rolling_shift, TimeSeries};

/// Maximum KSC iterations before giving up on full convergence.
const MAX_ITERATIONS: usize = 100;

/// Independent seeded restarts per clustering call; the run with the
/// lowest final distortion wins. Plain k-means-style initialization gets
/// stuck in duplicate-centroid optima often enough to matter, and the
/// beta_cv curve is only meaningful when each k is fit near its optimum.
const KSC_RESTARTS: u64 = 8;

/// A fitted clustering: `k` unit-norm centroids plus the cluster index of
/// every training series (in input order).
///
/// Clusters are canonically ordered by ascending centroid peak fraction,
/// so "cluster i" is comparable across training sets. `assignments` is a
/// training-time artifact and is not persisted by the model file format.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub window_days: f64,
    pub centroids: Vec<TimeSeries>,
    pub assignments: Vec<usize>,
    /// `(k, beta_cv)` pairs recorded while selecting k; `None` marks a
    /// degenerate beta_cv. Empty when k was fixed by the caller.
    pub beta_cv_curve: Vec<(usize, Option<f64>)>,
}

/// Per-k clustering quality (see [`beta_cv`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterQuality {
    pub beta_cv_by_k: Vec<(usize, Option<f64>)>,
}

/// Assigns each series to the nearest centroid. Ties break toward the
/// lowest cluster index.
pub fn assign_clusters(series: &[TimeSeries], centroids: &[TimeSeries]) -> Result<Vec<usize>> {
    if centroids.is_empty() {
        return Err(Error::Config("assign_clusters requires at least one centroid".into()));
    }
    series
        .par_iter()
        .map(|s| nearest_centroid(s, centroids).map(|(idx, _)| idx))
        .collect()
}

fn nearest_centroid(s: &TimeSeries, centroids: &[TimeSeries]) -> Result<(usize, f64)> {
    let mut best = (0usize, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = dist(s, c)?.distance;
        if d < best.1 {
            best = (j, d);
        }
    }
    Ok(best)
}

/// Computes the unit-norm centroid minimizing the summed squared distance
/// to the members.
///
/// When `reference` is given (the cluster's previous centroid), each
/// member is first rolled by its optimal shift against the reference so
/// the eigen-solve sees aligned series. The centroid sign is chosen so the
/// element sum is non-negative.
pub fn compute_centroid(members: &[&TimeSeries], reference: Option<&TimeSeries>) -> Result<TimeSeries> {
    if members.is_empty() {
        return Err(Error::EmptyCluster);
    }
    let n = members[0].len();
    let mut scatter = DMatrix::<f64>::zeros(n, n);
    let mut window_sum = 0.0;

    for member in members {
        if member.len() != n {
            return Err(Error::LengthMismatch { left: n, right: member.len() });
        }
        window_sum += member.window_days();
        let aligned: Vec<f64> = match reference {
            Some(c) => {
                let q = dist(member, c)?.q;
                rolling_shift(member, -q)?.values().to_vec()
            }
            None => member.values().to_vec(),
        };
        let norm2: f64 = aligned.iter().map(|v| v * v).sum();
        if norm2 == 0.0 {
            return Err(Error::DegenerateSeries(
                "all-zero member in centroid computation".into(),
            ));
        }
        // Accumulate x x^T / ||x||^2; the smallest eigenvalue of
        // m*I - scatter is the largest eigenvalue of scatter.
        for i in 0..n {
            let xi = aligned[i] / norm2;
            for j in 0..n {
                scatter[(i, j)] += xi * aligned[j];
            }
        }
    }

    let eigen = SymmetricEigen::new(scatter);
    let mut best_idx = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, val) in eigen.eigenvalues.iter().enumerate() {
        if *val > best_val {
            best_val = *val;
            best_idx = i;
        }
    }
    let mut centroid: Vec<f64> = eigen.eigenvectors.column(best_idx).iter().cloned().collect();
    if centroid.iter().sum::<f64>() < 0.0 {
        for v in &mut centroid {
            *v = -*v;
        }
    }
    let norm = centroid.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateSeries("zero eigenvector in centroid computation".into()));
    }
    for v in &mut centroid {
        *v /= norm;
    }
    Ok(TimeSeries::from_raw(centroid, window_sum / members.len() as f64))
}

/// Runs KSC clustering: seeded uniform random initial assignment, centroid
/// update, nearest-centroid reassignment, until convergence (no object
/// changes cluster) or the iteration cap. The loop restarts
/// [`KSC_RESTARTS`] times from seed-derived initializations and keeps the
/// lowest-distortion result, deterministically.
pub fn ksc_cluster(series: &[TimeSeries], k: usize, seed: u64) -> Result<ClusterModel> {
    ksc_cluster_with_trace(series, k, seed).map(|(model, _)| model)
}

/// Same as [`ksc_cluster`] but also returns the within-cluster distortion
/// `sum dist(s, c_assigned)^2` after each iteration of the winning
/// restart, which is non-increasing.
pub fn ksc_cluster_with_trace(
    series: &[TimeSeries],
    k: usize,
    seed: u64,
) -> Result<(ClusterModel, Vec<f64>)> {
    let mut best: Option<(f64, ClusterModel, Vec<f64>)> = None;
    for restart in 0..KSC_RESTARTS {
        let restart_seed = crate::forest::mix_seed(seed, restart, 0x6b5c);
        let (model, trace) = ksc_single_run(series, k, restart_seed)?;
        let distortion = *trace.last().expect("at least one iteration");
        if best.as_ref().is_none_or(|(d, _, _)| distortion < *d) {
            best = Some((distortion, model, trace));
        }
    }
    let (_, model, trace) = best.expect("at least one restart");
    Ok((model, trace))
}

fn ksc_single_run(
    series: &[TimeSeries],
    k: usize,
    seed: u64,
) -> Result<(ClusterModel, Vec<f64>)> {
    if k < 1 {
        return Err(Error::InvalidK { k, reason: "k must be at least 1".into() });
    }
    if k > series.len() {
        return Err(Error::InvalidK {
            k,
            reason: format!("k exceeds the number of series ({})", series.len()),
        });
    }
    let n = series[0].len();
    for s in series {
        if s.len() != n {
            return Err(Error::LengthMismatch { left: n, right: s.len() });
        }
        if s.is_zero() {
            return Err(Error::DegenerateSeries("all-zero series in clustering input".into()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments: Vec<usize> = (0..series.len()).map(|_| rng.random_range(0..k)).collect();
    repair_empty_initial(&mut assignments, k);

    let mut centroids: Vec<TimeSeries> = Vec::new();
    let mut distortion_trace = Vec::new();

    for iteration in 0..MAX_ITERATIONS {
        // Centroid update; on the first pass there is no previous centroid
        // to align against.
        let previous: Vec<Option<&TimeSeries>> = if iteration == 0 {
            vec![None; k]
        } else {
            centroids.iter().map(Some).collect()
        };
        let mut new_centroids = Vec::with_capacity(k);
        for cluster in 0..k {
            let members: Vec<&TimeSeries> = series
                .iter()
                .zip(&assignments)
                .filter(|(_, a)| **a == cluster)
                .map(|(s, _)| s)
                .collect();
            new_centroids.push(compute_centroid(&members, previous[cluster])?);
        }
        centroids = new_centroids;

        // Reassignment.
        let nearest: Vec<(usize, f64)> = series
            .par_iter()
            .map(|s| nearest_centroid(s, &centroids))
            .collect::<Result<_>>()?;
        let mut changes = 0;
        for (i, (idx, _)) in nearest.iter().enumerate() {
            if assignments[i] != *idx {
                assignments[i] = *idx;
                changes += 1;
            }
        }
        distortion_trace.push(nearest.iter().map(|(_, d)| d * d).sum());

        // Empty-cluster repair: seed an emptied cluster with the member
        // farthest from its current centroid.
        let mut sizes = vec![0usize; k];
        for a in &assignments {
            sizes[*a] += 1;
        }
        let mut dists: Vec<f64> = nearest.iter().map(|(_, d)| *d).collect();
        for cluster in 0..k {
            if sizes[cluster] > 0 {
                continue;
            }
            let farthest = (0..series.len())
                .filter(|i| sizes[assignments[*i]] > 1)
                .max_by(|a, b| dists[*a].partial_cmp(&dists[*b]).unwrap())
                .ok_or(Error::EmptyCluster)?;
            sizes[assignments[farthest]] -= 1;
            sizes[cluster] += 1;
            assignments[farthest] = cluster;
            dists[farthest] = 0.0;
            changes += 1;
        }

        if changes == 0 {
            break;
        }
    }

    let window_days =
        series.iter().map(TimeSeries::window_days).sum::<f64>() / series.len() as f64;
    let mut model = ClusterModel {
        k,
        window_days,
        centroids,
        assignments,
        beta_cv_curve: Vec::new(),
    };
    canonical_order(&mut model);
    Ok((model, distortion_trace))
}

/// Reorders clusters by ascending centroid peak fraction and remaps the
/// assignments accordingly.
fn canonical_order(model: &mut ClusterModel) {
    let mut order: Vec<usize> = (0..model.k).collect();
    order.sort_by(|a, b| {
        let pa = model.centroids[*a].peak_fraction();
        let pb = model.centroids[*b].peak_fraction();
        pa.partial_cmp(&pb).unwrap().then(a.cmp(b))
    });
    let mut remap = vec![0usize; model.k];
    for (new_idx, old_idx) in order.iter().enumerate() {
        remap[*old_idx] = new_idx;
    }
    let mut centroids = Vec::with_capacity(model.k);
    for old_idx in &order {
        centroids.push(model.centroids[*old_idx].clone());
    }
    model.centroids = centroids;
    for a in &mut model.assignments {
        *a = remap[*a];
    }
}

fn repair_empty_initial(assignments: &mut [usize], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for a in assignments.iter() {
            sizes[*a] += 1;
        }
        let Some(empty) = sizes.iter().position(|s| *s == 0) else {
            return;
        };
        // Steal the highest-index member of the largest cluster.
        let biggest = sizes
            .iter()
            .enumerate()
            .max_by_key(|(i, s)| (**s, usize::MAX - *i))
            .map(|(i, _)| i)
            .unwrap();
        let victim = assignments.iter().rposition(|a| *a == biggest).unwrap();
        assignments[victim] = empty;
    }
}

/// Coefficient of variation: standard deviation over mean, with the
/// zero-mean case defined as 0. Population standard deviation.
fn coefficient_of_variation(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean == 0.0 {
        return 0.0;
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    var.sqrt() / mean
}

/// beta_cv clustering quality: CV of intracluster distances (member to own
/// centroid) over CV of intercluster distances (unordered centroid pairs).
///
/// A zero intracluster CV short-circuits to 0; a zero intercluster CV with
/// a non-zero numerator is reported as a distinct degenerate error.
pub fn beta_cv(series: &[TimeSeries], model: &ClusterModel) -> Result<f64> {
    if model.k < 2 {
        return Err(Error::InvalidK { k: model.k, reason: "beta_cv requires at least 2 clusters".into() });
    }
    if model.assignments.len() != series.len() {
        return Err(Error::Config(format!(
            "model carries {} assignments for {} series",
            model.assignments.len(),
            series.len()
        )));
    }
    let intra: Vec<f64> = series
        .par_iter()
        .zip(&model.assignments)
        .map(|(s, a)| dist(s, &model.centroids[*a]).map(|al| al.distance))
        .collect::<Result<_>>()?;
    let cv_intra = coefficient_of_variation(&intra);
    if cv_intra == 0.0 {
        return Ok(0.0);
    }

    let mut inter = Vec::new();
    for i in 0..model.k {
        for j in (i + 1)..model.k {
            inter.push(dist(&model.centroids[i], &model.centroids[j])?.distance);
        }
    }
    let cv_inter = coefficient_of_variation(&inter);
    if cv_inter == 0.0 {
        return Err(Error::DivisionDegenerate);
    }
    Ok(cv_intra / cv_inter)
}

/// Relative change between consecutive beta_cv values; both-zero counts as
/// perfectly stable.
fn relative_change(prev: f64, next: f64) -> f64 {
    if prev == next {
        0.0
    } else if prev == 0.0 {
        f64::INFINITY
    } else {
        ((next - prev) / prev).abs()
    }
}

/// Computes beta_cv for k = 2..=k_max, running KSC at each k with the same
/// seed. Degenerate entries are recorded as `None`.
pub fn beta_cv_sweep(
    series: &[TimeSeries],
    k_max: usize,
    seed: u64,
) -> Result<Vec<(usize, Option<f64>, ClusterModel)>> {
    let mut out = Vec::new();
    for k in 2..=k_max {
        let model = ksc_cluster(series, k, seed)?;
        let value = match beta_cv(series, &model) {
            Ok(v) => Some(v),
            Err(Error::DivisionDegenerate) => None,
            Err(e) => return Err(e),
        };
        out.push((k, value, model));
    }
    Ok(out)
}

/// Picks the smallest k whose beta_cv stays roughly stable over the next
/// `window` consecutive values: every consecutive relative change among
/// beta_cv(k..=k+window) must stay below `stability_tol`.
pub fn choose_k(
    series: &[TimeSeries],
    k_max: usize,
    stability_tol: f64,
    window: usize,
    seed: u64,
) -> Result<usize> {
    if k_max < 3 {
        return Err(Error::InvalidK { k: k_max, reason: "choose_k requires k_max >= 3".into() });
    }
    if window < 1 {
        return Err(Error::Config("choose_k window must be at least 1".into()));
    }
    let sweep = beta_cv_sweep(series, k_max, seed)?;
    let curve: Vec<(usize, Option<f64>)> = sweep.iter().map(|(k, v, _)| (*k, *v)).collect();

    for start in 0..curve.len() {
        let end = start + window;
        if end >= curve.len() {
            break;
        }
        let vals: Option<Vec<f64>> = curve[start..=end].iter().map(|(_, v)| *v).collect();
        let Some(vals) = vals else { continue };
        let stable = vals.windows(2).all(|w| relative_change(w[0], w[1]) < stability_tol);
        if stable {
            return Ok(curve[start].0);
        }
    }
    Err(Error::NoElbow { curve })
}

/// Defaults used by [`extract_trends`] when the caller does not override
/// the stability rule.
pub const DEFAULT_STABILITY_TOL: f64 = 0.1;
pub const DEFAULT_STABILITY_WINDOW: usize = 2;

/// Full trend extraction: select k via [`choose_k`], return the model
/// fitted at that k with the beta_cv curve attached.
pub fn extract_trends(
    series: &[TimeSeries],
    k_max: usize,
    stability_tol: f64,
    window: usize,
    seed: u64,
) -> Result<ClusterModel> {
    if k_max < 3 {
        return Err(Error::InvalidK { k: k_max, reason: "extract_trends requires k_max >= 3".into() });
    }
    let sweep = beta_cv_sweep(series, k_max, seed)?;
    let curve: Vec<(usize, Option<f64>)> = sweep.iter().map(|(k, v, _)| (*k, *v)).collect();
    for start in 0..curve.len() {
        let end = start + window;
        if end >= curve.len() {
            break;
        }
        let vals: Option<Vec<f64>> = curve[start..=end].iter().map(|(_, v)| *v).collect();
        let Some(vals) = vals else { continue };
        if vals.windows(2).all(|w| relative_change(w[0], w[1]) < stability_tol) {
            let mut model = sweep.into_iter().nth(start).map(|(_, _, m)| m).unwrap();
            model.beta_cv_curve = curve;
            return Ok(model);
        }
    }
    Err(Error::NoElbow { curve })
}

/// Per-cluster shapelet radius: the distance from the centroid to the
/// member of its cluster that is furthest away.
pub fn shapelet_radii(
    series: &[TimeSeries],
    assignments: &[usize],
    centroids: &[TimeSeries],
) -> Result<Vec<f64>> {
    let mut radii = vec![0.0f64; centroids.len()];
    for (s, a) in series.iter().zip(assignments) {
        let d = dist(s, &centroids[*a])?.distance;
        if d > radii[*a] {
            radii[*a] = d;
        }
    }
    Ok(radii)
}

/// Fraction of non-members of each cluster that still fall within the
/// cluster's shapelet radius. Reported, not asserted: the strict
/// separation half of the shapelet definition does not hold for arbitrary
/// data.
pub fn shapelet_enclosure_report(
    series: &[TimeSeries],
    assignments: &[usize],
    centroids: &[TimeSeries],
) -> Result<Vec<f64>> {
    let radii = shapelet_radii(series, assignments, centroids)?;
    let mut within = vec![0usize; centroids.len()];
    let mut total = vec![0usize; centroids.len()];
    for (s, a) in series.iter().zip(assignments) {
        for (c_idx, centroid) in centroids.iter().enumerate() {
            if c_idx == *a {
                continue;
            }
            total[c_idx] += 1;
            if dist(s, centroid)?.distance <= radii[c_idx] {
                within[c_idx] += 1;
            }
        }
    }
    Ok(within
        .iter()
        .zip(&total)
        .map(|(w, t)| if *t == 0 { 0.0 } else { *w as f64 / *t as f64 })
        .collect())
}

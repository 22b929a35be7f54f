//! Popularity time series, the rolling shift operator, and the
//! scale/shift-invariant distance used everywhere else in the crate.
//!
//! The distance between two equal-length series `a` and `b` is
//!
//! ```text
//! dist(a, b) = min over q, alpha of ||a - alpha * b(q)|| / ||a||
//! ```
//!
//! where `b(q)` rolls `b` by `q` positions (elements shifted past the end
//! wrap to the front) and, for a fixed shift, the scale `alpha` has the
//! closed form `dot(a, b(q)) / ||b||^2`. With the optimal `alpha` the
//! residual is the component of `a` orthogonal to `b(q)`, so the distance
//! lies in `[0, 1]`.

use crate::error::{Error, Result};

/// Fixed-length popularity series: views (or comments, favorites) per
/// time window, plus the duration of one window in days.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    window_days: f64,
}

impl TimeSeries {
    /// Builds a validated series: values must be finite and non-negative,
    /// and the window duration positive.
    pub fn new(values: Vec<f64>, window_days: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("time series must be non-empty".into()));
        }
        if !(window_days > 0.0) || !window_days.is_finite() {
            return Err(Error::InvalidInput(format!(
                "window_days must be positive and finite, got {window_days}"
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "time series values must be finite and non-negative, got {bad}"
            )));
        }
        Ok(Self { values, window_days })
    }

    /// Builds a series without the non-negativity check. Centroids are
    /// eigenvectors and may carry slightly negative entries.
    pub fn from_raw(values: Vec<f64>, window_days: f64) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values, window_days }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn window_days(&self) -> f64 {
        self.window_days
    }

    /// True when every value is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Sum of all values.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Sum of the first `t` values.
    pub fn cumulative(&self, t: usize) -> f64 {
        self.values[..t.min(self.values.len())].iter().sum()
    }

    /// Largest single-window value divided by the total; 0 when the total
    /// is zero.
    pub fn peak_fraction(&self) -> f64 {
        let total = self.total();
        if total <= 0.0 {
            return 0.0;
        }
        let max = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        max / total
    }
}

/// Growing prefix of a test object's popularity observations. Append-only:
/// once observed, a prefix never changes.
#[derive(Debug, Clone, PartialEq)]
pub struct PopStream {
    object_id: String,
    observed: Vec<f64>,
}

impl PopStream {
    pub fn new(object_id: impl Into<String>) -> Self {
        Self { object_id: object_id.into(), observed: Vec::new() }
    }

    pub fn from_values(object_id: impl Into<String>, observed: Vec<f64>) -> Self {
        Self { object_id: object_id.into(), observed }
    }

    /// Treats a fixed-length series as the stream of a monitored object.
    pub fn from_series(object_id: impl Into<String>, series: &TimeSeries) -> Self {
        Self::from_values(object_id, series.values().to_vec())
    }

    pub fn object_id(&self) -> &str {
        &self.object_id
    }

    pub fn push(&mut self, value: f64) {
        self.observed.push(value);
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    /// First `t_r` observations, or an error when fewer have been seen.
    pub fn prefix(&self, t_r: usize) -> Result<&[f64]> {
        if t_r < 1 {
            return Err(Error::InvalidPeriod(t_r));
        }
        if t_r > self.observed.len() {
            return Err(Error::InsufficientData(format!(
                "stream {} has {} observations, {} requested",
                self.object_id,
                self.observed.len(),
                t_r
            )));
        }
        Ok(&self.observed[..t_r])
    }
}

/// Result of the distance minimization: the optimal scale, the optimal
/// shift, and the distance itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub alpha: f64,
    pub q: isize,
    pub distance: f64,
}

/// Rolls `s` by `q` positions. Elements shifted past the end return to the
/// beginning, so the operation is length- and norm-preserving.
pub fn rolling_shift(s: &TimeSeries, q: isize) -> Result<TimeSeries> {
    let n = s.len();
    if q.unsigned_abs() >= n {
        return Err(Error::InvalidShift { shift: q, len: n });
    }
    Ok(TimeSeries::from_raw(rotate(s.values(), q), s.window_days()))
}

/// Rolls a slice by `q` positions; `out[i] = v[(i - q) mod n]`.
pub(crate) fn rotate(v: &[f64], q: isize) -> Vec<f64> {
    let n = v.len() as isize;
    let start = (-q).rem_euclid(n) as usize;
    let mut out = Vec::with_capacity(v.len());
    out.extend_from_slice(&v[start..]);
    out.extend_from_slice(&v[..start]);
    out
}

/// Scale minimizing `||target - alpha * candidate||`:
/// `dot(target, candidate) / ||candidate||^2`.
pub fn optimal_alpha(target: &TimeSeries, candidate_shifted: &TimeSeries) -> Result<f64> {
    if target.len() != candidate_shifted.len() {
        return Err(Error::LengthMismatch { left: target.len(), right: candidate_shifted.len() });
    }
    let norm2: f64 = candidate_shifted.values().iter().map(|v| v * v).sum();
    if norm2 == 0.0 {
        return Err(Error::DegenerateSeries("all-zero candidate in optimal_alpha".into()));
    }
    let dot: f64 = target
        .values()
        .iter()
        .zip(candidate_shifted.values())
        .map(|(a, b)| a * b)
        .sum();
    Ok(dot / norm2)
}

/// Scale/shift-invariant distance between two equal-length series.
///
/// The shift search is exhaustive over `q` in `(-n, n)`; q = 0 is included
/// so that `dist(s, s) = 0`. Ties break toward smaller `|q|`, then smaller
/// `q`. An all-zero `a` is an error (the norm denominator vanishes); an
/// all-zero `b` yields distance 1 with `alpha = 0`, since no scaling of
/// zero approximates a non-zero target. Relative distances below 1e-12
/// are collapsed to exactly 0 (duplicates and pure scale copies).
pub fn dist(a: &TimeSeries, b: &TimeSeries) -> Result<Alignment> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    dist_between(a.values(), b.values())
}

/// Slice-level form of [`dist`] used by the alignment loops, where series
/// windows are compared directly.
pub fn dist_between(a: &[f64], b: &[f64]) -> Result<Alignment> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    let n = a.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty series in dist".into()));
    }
    let norm_a2: f64 = a.iter().map(|v| v * v).sum();
    if norm_a2 == 0.0 {
        return Err(Error::DegenerateSeries("all-zero series on the normalized side".into()));
    }
    let norm_b2: f64 = b.iter().map(|v| v * v).sum();
    if norm_b2 == 0.0 {
        return Ok(Alignment { alpha: 0.0, q: 0, distance: 1.0 });
    }

    let mut best_r2 = f64::INFINITY;
    let mut best_alpha = 0.0;
    let mut best_q = 0isize;
    // Residuals within this margin of the current best get the exact pass;
    // everything else is pruned by the closed-form lower bound.
    let margin = 1e-9 * norm_a2;
    // Relative residuals below 1e-12 are rounding noise from numerically
    // identical series; collapse them to an exact zero so duplicate and
    // pure-scale-copy inputs report distance 0.
    let zero_snap = 1e-24 * norm_a2;

    for q in shift_order(n) {
        let start = (-q).rem_euclid(n as isize) as usize;
        let dot = shifted_dot(a, b, start);
        // For the optimal alpha at this shift the residual equals
        // norm_a2 - dot^2 / norm_b2 in exact arithmetic; use it as a
        // cheap screen before the cancellation-free pass below.
        let bound = norm_a2 - dot * dot / norm_b2;
        if bound > best_r2 + margin {
            continue;
        }
        let alpha = dot / norm_b2;
        let r2 = shifted_residual2(a, b, start, alpha);
        if r2 < best_r2 {
            best_r2 = r2;
            best_alpha = alpha;
            best_q = q;
        }
    }

    let distance = if best_r2 <= zero_snap { 0.0 } else { (best_r2 / norm_a2).sqrt() };
    Ok(Alignment { alpha: best_alpha, q: best_q, distance })
}

/// Shift candidates in tie-break order: 0, -1, 1, -2, 2, ...
fn shift_order(n: usize) -> impl Iterator<Item = isize> {
    let n = n as isize;
    std::iter::once(0).chain((1..n).flat_map(|m| [-m, m]))
}

/// `dot(a, b(q))` where the rolled series starts at `start = (-q) mod n`.
fn shifted_dot(a: &[f64], b: &[f64], start: usize) -> f64 {
    let n = a.len();
    let head = n - start;
    let mut acc = 0.0;
    for i in 0..head {
        acc += a[i] * b[start + i];
    }
    for i in head..n {
        acc += a[i] * b[i - head];
    }
    acc
}

/// `||a - alpha * b(q)||^2` computed directly, avoiding the catastrophic
/// cancellation of the closed-form residual when the series are nearly
/// parallel.
fn shifted_residual2(a: &[f64], b: &[f64], start: usize, alpha: f64) -> f64 {
    let n = a.len();
    let head = n - start;
    let mut acc = 0.0;
    for i in 0..head {
        let d = a[i] - alpha * b[start + i];
        acc += d * d;
    }
    for i in head..n {
        let d = a[i] - alpha * b[i - head];
        acc += d * d;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ts(values: &[f64]) -> TimeSeries {
        TimeSeries::new(values.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn rolling_shift_identity() {
        let s = ts(&[7.0, 8.0, 9.0]);
        assert_eq!(rolling_shift(&s, 0).unwrap().values(), &[7.0, 8.0, 9.0]);
    }

    #[test]
    fn rolling_shift_wraps_end_to_front() {
        let s = ts(&[7.0, 8.0, 9.0]);
        assert_eq!(rolling_shift(&s, 1).unwrap().values(), &[9.0, 7.0, 8.0]);
        assert_eq!(rolling_shift(&s, -1).unwrap().values(), &[8.0, 9.0, 7.0]);
    }

    #[test]
    fn rolling_shift_rejects_out_of_range() {
        let s = ts(&[7.0, 8.0, 9.0]);
        assert!(matches!(rolling_shift(&s, 3), Err(Error::InvalidShift { .. })));
        assert!(matches!(rolling_shift(&s, -3), Err(Error::InvalidShift { .. })));
    }

    #[test]
    fn optimal_alpha_identity_and_scaling() {
        let s = ts(&[1.0, 2.0, 3.0]);
        assert_eq!(optimal_alpha(&s, &s).unwrap(), 1.0);
        let doubled = ts(&[2.0, 4.0, 6.0]);
        assert!((optimal_alpha(&doubled, &s).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn optimal_alpha_matches_numeric_minimizer() {
        // (<1,2>, <1,0>) -> 1.0, checked against a 1-D scan over alpha.
        let target = ts(&[1.0, 2.0]);
        let cand = ts(&[1.0, 0.0]);
        let alpha = optimal_alpha(&target, &cand).unwrap();
        assert!((alpha - 1.0).abs() < 1e-12);

        let residual = |al: f64| {
            target
                .values()
                .iter()
                .zip(cand.values())
                .map(|(t, c)| (t - al * c).powi(2))
                .sum::<f64>()
        };
        let base = residual(alpha);
        let mut best = f64::INFINITY;
        let mut best_alpha = 0.0;
        let mut al = -3.0;
        while al <= 3.0 {
            let r = residual(al);
            if r < best {
                best = r;
                best_alpha = al;
            }
            al += 1e-4;
        }
        assert!(base <= best + 1e-9);
        assert!((best_alpha - alpha).abs() < 1e-3);
    }

    #[test]
    fn optimal_alpha_rejects_zero_candidate() {
        let target = ts(&[1.0, 2.0]);
        let zero = ts(&[0.0, 0.0]);
        assert!(matches!(optimal_alpha(&target, &zero), Err(Error::DegenerateSeries(_))));
    }

    #[test]
    fn dist_identity_is_zero() {
        let s = ts(&[1.0, 5.0, 2.0, 0.5]);
        let d = dist(&s, &s).unwrap();
        assert!(d.distance < 1e-12, "distance {}", d.distance);
        assert_eq!(d.q, 0);
    }

    #[test]
    fn dist_scale_invariance() {
        let a = ts(&[1.0, 2.0, 3.0, 4.0]);
        let b = ts(&[2.0, 4.0, 6.0, 8.0]);
        let d = dist(&a, &b).unwrap();
        assert!(d.distance < 1e-12);
        assert!((d.alpha - 0.5).abs() < 1e-12);
        assert_eq!(d.q, 0);
    }

    #[test]
    fn dist_shift_invariance() {
        let a = ts(&[1.0, 0.0, 0.0, 0.0]);
        let b = ts(&[0.0, 0.0, 1.0, 0.0]);
        let d = dist(&a, &b).unwrap();
        assert!(d.distance < 1e-12, "distance {}", d.distance);
    }

    #[test]
    fn dist_orthogonal_is_one() {
        // Brute force over all q with the closed-form alpha gives 1 for
        // <1,1> vs <1,-1>: every shift has zero dot product.
        let a = ts(&[1.0, 1.0]);
        let b = TimeSeries::from_raw(vec![1.0, -1.0], 1.0);
        let d = dist(&a, &b).unwrap();
        assert!((d.distance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dist_of_duplicates_is_exactly_zero() {
        let a = ts(&[1.3, 5.7, 2.2, 0.9]);
        assert_eq!(dist(&a, &a).unwrap().distance, 0.0);
        let scaled = TimeSeries::from_raw(a.values().iter().map(|v| v * 3.7).collect(), 1.0);
        assert_eq!(dist(&a, &scaled).unwrap().distance, 0.0);
    }

    #[test]
    fn dist_zero_b_convention() {
        let a = ts(&[1.0, 2.0]);
        let b = ts(&[0.0, 0.0]);
        let d = dist(&a, &b).unwrap();
        assert_eq!(d.distance, 1.0);
        assert_eq!(d.alpha, 0.0);
    }

    #[test]
    fn dist_zero_a_is_error() {
        let a = ts(&[0.0, 0.0]);
        let b = ts(&[1.0, 2.0]);
        assert!(matches!(dist(&a, &b), Err(Error::DegenerateSeries(_))));
    }

    #[test]
    fn prefix_bounds() {
        let s = PopStream::from_values("x", vec![1.0, 2.0, 3.0]);
        assert_eq!(s.prefix(2).unwrap(), &[1.0, 2.0]);
        assert!(matches!(s.prefix(0), Err(Error::InvalidPeriod(0))));
        assert!(matches!(s.prefix(4), Err(Error::InsufficientData(_))));
    }

    /// Reference implementation: materialize every shift, use the closed
    /// form for alpha, take the minimum.
    fn dist_brute(a: &[f64], b: &[f64]) -> (f64, isize, f64) {
        let n = a.len() as isize;
        let norm_a2: f64 = a.iter().map(|v| v * v).sum();
        let mut best = (f64::INFINITY, 0isize, 0.0f64);
        let mut qs: Vec<isize> = (-(n - 1)..n).collect();
        qs.sort_by_key(|q| (q.abs(), *q));
        for q in qs {
            let shifted = rotate(b, q);
            let nb2: f64 = shifted.iter().map(|v| v * v).sum();
            if nb2 == 0.0 {
                continue;
            }
            let dot: f64 = a.iter().zip(&shifted).map(|(x, y)| x * y).sum();
            let alpha = dot / nb2;
            let r2: f64 = a.iter().zip(&shifted).map(|(x, y)| (x - alpha * y).powi(2)).sum();
            let d = (r2 / norm_a2).sqrt();
            if d < best.0 {
                best = (d, q, alpha);
            }
        }
        best
    }

    #[test]
    fn dist_matches_brute_force_on_seeded_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(2..12);
            let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0).collect();
            let got = dist_between(&a, &b).unwrap();
            let (want_d, _, _) = dist_brute(&a, &b);
            assert!(
                (got.distance - want_d).abs() < 1e-9,
                "distance {} vs brute {}",
                got.distance,
                want_d
            );
        }
    }

    proptest! {
        #[test]
        fn dist_symmetry(raw_a in prop::collection::vec(0.01f64..10.0, 8), raw_b in prop::collection::vec(0.01f64..10.0, 8)) {
            let d_ab = dist_between(&raw_a, &raw_b).unwrap().distance;
            let d_ba = dist_between(&raw_b, &raw_a).unwrap().distance;
            prop_assert!((d_ab - d_ba).abs() < 1e-9, "{} vs {}", d_ab, d_ba);
        }

        #[test]
        fn dist_range(raw_a in prop::collection::vec(0.0f64..10.0, 8), raw_b in prop::collection::vec(0.0f64..10.0, 8)) {
            prop_assume!(raw_a.iter().any(|v| *v > 0.0));
            let d = dist_between(&raw_a, &raw_b).unwrap().distance;
            prop_assert!(d >= 0.0);
            prop_assert!(d <= 1.0 + 1e-12, "distance {}", d);
        }

        #[test]
        fn scale_shift_invariance(raw in prop::collection::vec(0.01f64..10.0, 8), c in 0.01f64..100.0, q in -7isize..8) {
            let s = TimeSeries::new(raw, 1.0).unwrap();
            let shifted = rolling_shift(&s, q).unwrap();
            let scaled = TimeSeries::from_raw(shifted.values().iter().map(|v| v * c).collect(), 1.0);
            let d = dist(&s, &scaled).unwrap().distance;
            prop_assert!(d < 1e-9, "distance {}", d);
        }

        #[test]
        fn alpha_is_the_minimizer(raw_a in prop::collection::vec(0.01f64..10.0, 6), raw_b in prop::collection::vec(0.01f64..10.0, 6)) {
            // Finite-difference check: perturbing alpha never decreases
            // the residual at the chosen shift.
            let got = dist_between(&raw_a, &raw_b).unwrap();
            let shifted = rotate(&raw_b, got.q);
            let residual = |alpha: f64| -> f64 {
                raw_a.iter().zip(&shifted).map(|(x, y)| (x - alpha * y).powi(2)).sum()
            };
            let base = residual(got.alpha);
            prop_assert!(residual(got.alpha + 1e-3) >= base - 1e-12);
            prop_assert!(residual(got.alpha - 1e-3) >= base - 1e-12);
        }
    }
}

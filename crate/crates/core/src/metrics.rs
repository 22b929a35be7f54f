//! Classification, earliness, and bias metrics, plus the relative squared
//! error used on the regression side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Micro/Macro F1 plus the per-class scores they are built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Scores {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
}

/// Per-class F1 from precision and recall, with 0/0 defined as 0; macro is
/// the unweighted class mean, micro comes from pooled counts (and equals
/// accuracy for single-label predictions).
pub fn f1_scores(truth: &[usize], predicted: &[usize], k: usize) -> Result<F1Scores> {
    if truth.len() != predicted.len() {
        return Err(Error::InvalidInput(format!(
            "truth has {} labels, predicted has {}",
            truth.len(),
            predicted.len()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    let mut tp = vec![0usize; k];
    let mut fp = vec![0usize; k];
    let mut fn_ = vec![0usize; k];
    for (t, p) in truth.iter().zip(predicted) {
        if *t >= k || *p >= k {
            return Err(Error::InvalidInput(format!(
                "label out of range: truth {t}, predicted {p}, k {k}"
            )));
        }
        if t == p {
            tp[*t] += 1;
        } else {
            fn_[*t] += 1;
            fp[*p] += 1;
        }
    }

    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let f1 = |p: f64, r: f64| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };

    let per_class_f1: Vec<f64> = (0..k)
        .map(|c| {
            let p = ratio(tp[c], tp[c] + fp[c]);
            let r = ratio(tp[c], tp[c] + fn_[c]);
            f1(p, r)
        })
        .collect();
    let macro_f1 = per_class_f1.iter().sum::<f64>() / k as f64;

    let tp_sum: usize = tp.iter().sum();
    let fp_sum: usize = fp.iter().sum();
    let fn_sum: usize = fn_.iter().sum();
    let micro_p = ratio(tp_sum, tp_sum + fp_sum);
    let micro_r = ratio(tp_sum, tp_sum + fn_sum);
    let micro_f1 = f1(micro_p, micro_r);

    Ok(F1Scores { micro_f1, macro_f1, per_class_f1 })
}

/// Fraction of a series' total views received after window `t`.
pub fn remaining_interest(views: &TimeSeries, t: usize) -> Result<f64> {
    let n = views.len();
    if t > n {
        return Err(Error::InvalidPeriod(t));
    }
    let total = views.total();
    if total <= 0.0 {
        return Err(Error::UndefinedRi);
    }
    let tail: f64 = views.values()[t..].iter().sum();
    Ok(tail / total)
}

/// Pearson correlation of `log10(total views)` against remaining interest,
/// and Spearman's rank correlation with average ranks for ties. Constant
/// input on either axis is a typed error, not a NaN.
pub fn bias_correlations(objects: &[(f64, f64)]) -> Result<(f64, f64)> {
    if objects.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "correlation needs at least 2 objects, got {}",
            objects.len()
        )));
    }
    for (views, _) in objects {
        if !(*views > 0.0) {
            return Err(Error::InvalidInput(format!(
                "total views must be positive for the log transform, got {views}"
            )));
        }
    }
    let xs: Vec<f64> = objects.iter().map(|(v, _)| v.log10()).collect();
    let ys: Vec<f64> = objects.iter().map(|(_, ri)| *ri).collect();
    let pearson = pearson_correlation(&xs, &ys)?;
    let spearman = pearson_correlation(&average_ranks(&xs), &average_ranks(&ys))?;
    Ok((pearson, spearman))
}

fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input on one axis".into()));
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Ranks starting at 1, ties sharing the average of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*a].partial_cmp(&values[*b]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for pos in i..=j {
            ranks[order[pos]] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Mean relative squared error: mean of `(predicted / actual - 1)^2`.
pub fn mrse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::InvalidInput(format!(
            "predicted has {} values, actual has {}",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::InvalidInput("mrse over an empty sample".into()));
    }
    let mut acc = 0.0;
    for (p, a) in predicted.iter().zip(actual) {
        if !(*a > 0.0) {
            return Err(Error::InvalidTarget(format!("actual value must be positive, got {a}")));
        }
        acc += (p / a - 1.0).powi(2);
    }
    Ok(acc / predicted.len() as f64)
}

/// One fold's evaluation output. Remaining-interest values are reported
/// separately for correctly and incorrectly classified objects; the bias
/// correlations are computed over the correct ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
    pub ri_correct: Vec<f64>,
    pub ri_incorrect: Vec<f64>,
    pub pearson: f64,
    pub spearman: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mrse: Option<f64>,
}

impl EvalReport {
    pub fn median_ri_correct(&self) -> Option<f64> {
        median(&self.ri_correct)
    }
}

pub(crate) fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 0 { (sorted[mid - 1] + sorted[mid]) / 2.0 } else { sorted[mid] })
}

/// Mean and the half-width of a 95% confidence interval under the normal
/// approximation (1.96 standard errors).
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions_score_one() {
        let labels = vec![0, 1, 2, 1, 0];
        let scores = f1_scores(&labels, &labels, 3).unwrap();
        assert_eq!(scores.micro_f1, 1.0);
        assert_eq!(scores.macro_f1, 1.0);
    }

    #[test]
    fn all_wrong_single_class_is_zero() {
        let truth = vec![0, 0, 0];
        let predicted = vec![1, 1, 1];
        let scores = f1_scores(&truth, &predicted, 2).unwrap();
        assert_eq!(scores.per_class_f1[0], 0.0);
        assert_eq!(scores.micro_f1, 0.0);
    }

    #[test]
    fn three_class_confusion_matrix_oracle() {
        // Confusion matrix [[2,1,0],[0,2,0],[1,0,2]] (rows = truth):
        // expand to label lists and check against hand-computed P/R.
        let mut truth = Vec::new();
        let mut predicted = Vec::new();
        let matrix = [[2, 1, 0], [0, 2, 0], [1, 0, 2]];
        for (t, row) in matrix.iter().enumerate() {
            for (p, count) in row.iter().enumerate() {
                for _ in 0..*count {
                    truth.push(t);
                    predicted.push(p);
                }
            }
        }
        let scores = f1_scores(&truth, &predicted, 3).unwrap();
        // Class 0: P = 2/3, R = 2/3 -> F1 = 2/3.
        // Class 1: P = 2/3, R = 1 -> F1 = 4/5.
        // Class 2: P = 1, R = 2/3 -> F1 = 4/5.
        assert!((scores.per_class_f1[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((scores.per_class_f1[1] - 0.8).abs() < 1e-12);
        assert!((scores.per_class_f1[2] - 0.8).abs() < 1e-12);
        assert!((scores.macro_f1 - (2.0 / 3.0 + 0.8 + 0.8) / 3.0).abs() < 1e-12);
        // Micro equals accuracy: 6 correct of 8.
        assert!((scores.micro_f1 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn micro_equals_accuracy_on_random_labels() {
        let truth: Vec<usize> = (0..50).map(|i| (i * 7 + 1) % 4).collect();
        let predicted: Vec<usize> = (0..50).map(|i| (i * 3 + 2) % 4).collect();
        let scores = f1_scores(&truth, &predicted, 4).unwrap();
        let accuracy =
            truth.iter().zip(&predicted).filter(|(t, p)| t == p).count() as f64 / 50.0;
        assert!((scores.micro_f1 - accuracy).abs() < 1e-12);
    }

    fn ts(values: &[f64]) -> TimeSeries {
        TimeSeries::new(values.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn remaining_interest_boundaries() {
        let views = ts(&[10.0, 10.0, 10.0, 10.0]);
        assert_eq!(remaining_interest(&views, 0).unwrap(), 1.0);
        assert_eq!(remaining_interest(&views, 4).unwrap(), 0.0);
        assert!((remaining_interest(&views, 1).unwrap() - 0.75).abs() < 1e-12);
        assert!(matches!(remaining_interest(&ts(&[0.0, 0.0]), 1), Err(Error::UndefinedRi)));
        assert!(matches!(remaining_interest(&views, 5), Err(Error::InvalidPeriod(5))));
    }

    #[test]
    fn remaining_interest_is_non_increasing_in_t() {
        let views = ts(&[5.0, 0.0, 3.0, 1.0, 8.0]);
        let mut prev = 1.0;
        for t in 0..=5 {
            let ri = remaining_interest(&views, t).unwrap();
            assert!(ri <= prev + 1e-12);
            assert!((0.0..=1.0).contains(&ri));
            prev = ri;
        }
    }

    #[test]
    fn spearman_of_monotone_data() {
        let increasing: Vec<(f64, f64)> =
            (1..6).map(|i| (10f64.powi(i), i as f64 * 0.1)).collect();
        let (_, rho_s) = bias_correlations(&increasing).unwrap();
        assert!((rho_s - 1.0).abs() < 1e-12);

        let decreasing: Vec<(f64, f64)> =
            (1..6).map(|i| (10f64.powi(i), 1.0 - i as f64 * 0.1)).collect();
        let (_, rho_s) = bias_correlations(&decreasing).unwrap();
        assert!((rho_s + 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlations_match_rank_oracle_on_hand_dataset() {
        let data = vec![(10.0, 0.2), (100.0, 0.5), (1000.0, 0.3), (50.0, 0.3), (10.0, 0.9)];
        let (pearson, spearman) = bias_correlations(&data).unwrap();

        // Rank oracle: sort, assign average ranks, then plain Pearson.
        let xs: Vec<f64> = data.iter().map(|(v, _)| v.log10()).collect();
        let ys: Vec<f64> = data.iter().map(|(_, r)| *r).collect();
        let rank = |vals: &[f64]| -> Vec<f64> {
            vals.iter()
                .map(|v| {
                    let below = vals.iter().filter(|o| *o < v).count() as f64;
                    let equal = vals.iter().filter(|o| *o == v).count() as f64;
                    below + (equal + 1.0) / 2.0
                })
                .collect()
        };
        let plain_pearson = |a: &[f64], b: &[f64]| -> f64 {
            let n = a.len() as f64;
            let ma = a.iter().sum::<f64>() / n;
            let mb = b.iter().sum::<f64>() / n;
            let num: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
            let da: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>().sqrt();
            let db: f64 = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>().sqrt();
            num / (da * db)
        };
        assert!((pearson - plain_pearson(&xs, &ys)).abs() < 1e-12);
        assert!((spearman - plain_pearson(&rank(&xs), &rank(&ys))).abs() < 1e-12);
    }

    #[test]
    fn constant_axis_is_a_typed_error() {
        let data = vec![(10.0, 0.5), (100.0, 0.5), (1000.0, 0.5)];
        assert!(matches!(bias_correlations(&data), Err(Error::UndefinedCorrelation(_))));
    }

    #[test]
    fn mrse_examples() {
        assert_eq!(mrse(&[2.0, 3.0], &[2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(mrse(&[4.0, 6.0], &[2.0, 3.0]).unwrap(), 1.0);
        assert!((mrse(&[1.0, 3.0], &[2.0, 2.0]).unwrap() - 0.25).abs() < 1e-12);
        assert!(matches!(mrse(&[1.0], &[0.0]), Err(Error::InvalidTarget(_))));
    }

    #[test]
    fn mrse_is_scale_invariant() {
        let predicted = vec![1.0, 5.0, 2.5];
        let actual = vec![2.0, 4.0, 2.0];
        let base = mrse(&predicted, &actual).unwrap();
        for c in [0.5, 3.0, 1000.0] {
            let sp: Vec<f64> = predicted.iter().map(|v| v * c).collect();
            let sa: Vec<f64> = actual.iter().map(|v| v * c).collect();
            assert!((mrse(&sp, &sa).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn metric_order_invariance() {
        let truth = vec![0, 1, 2, 0, 1, 2, 1];
        let predicted = vec![0, 2, 2, 0, 1, 1, 1];
        let base = f1_scores(&truth, &predicted, 3).unwrap();
        // Reverse the object order.
        let rt: Vec<usize> = truth.iter().rev().copied().collect();
        let rp: Vec<usize> = predicted.iter().rev().copied().collect();
        let rev = f1_scores(&rt, &rp, 3).unwrap();
        assert_eq!(base, rev);
    }
}

//! User-generated-content objects and the per-object feature vectors fed
//! to the ensemble learner.
//!
//! Features are causal: nothing computed here reads series windows past
//! the monitoring period `t_r`, and referrer fields only surface once the
//! referrer's first date falls inside the monitored span.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{FeatureKind, FeatureVector, MISSING_NUMERIC};
use crate::series::TimeSeries;

/// An incoming link: its type code, the date it was first seen, and the
/// views it drove.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Referrer {
    pub kind: u32,
    pub first_date: NaiveDate,
    pub views: f64,
}

/// One monitored object: identity, static attributes, the three
/// popularity series (sharing length and window duration), and up to ten
/// referrer records.
#[derive(Debug, Clone, PartialEq)]
pub struct UGCObject {
    pub object_id: String,
    pub upload_date: NaiveDate,
    pub category: u32,
    pub age_days: u32,
    pub window_days: f64,
    pub views: TimeSeries,
    pub comments: TimeSeries,
    pub favorites: TimeSeries,
    pub referrers: Vec<Referrer>,
    /// Ground-truth template index when the object came from the
    /// synthetic generator.
    pub template_label: Option<usize>,
}

pub const MAX_REFERRERS: usize = 10;

/// Serialized form: series as bare arrays with a single shared
/// window_days, one JSON document per line in dataset files.
#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct UgcRecord {
    pub object_id: String,
    pub upload_date: NaiveDate,
    pub category: u32,
    pub age_days: u32,
    pub window_days: f64,
    pub views: Vec<f64>,
    pub comments: Vec<f64>,
    pub favorites: Vec<f64>,
    pub referrers: Vec<Referrer>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub template_label: Option<usize>,
}

impl From<&UGCObject> for UgcRecord {
    fn from(obj: &UGCObject) -> Self {
        UgcRecord {
            object_id: obj.object_id.clone(),
            upload_date: obj.upload_date,
            category: obj.category,
            age_days: obj.age_days,
            window_days: obj.window_days,
            views: obj.views.values().to_vec(),
            comments: obj.comments.values().to_vec(),
            favorites: obj.favorites.values().to_vec(),
            referrers: obj.referrers.clone(),
            template_label: obj.template_label,
        }
    }
}

impl TryFrom<UgcRecord> for UGCObject {
    type Error = Error;

    fn try_from(rec: UgcRecord) -> Result<Self> {
        let n = rec.views.len();
        if rec.comments.len() != n || rec.favorites.len() != n {
            return Err(Error::Validation(format!(
                "object {}: series lengths differ (views {}, comments {}, favorites {})",
                rec.object_id,
                n,
                rec.comments.len(),
                rec.favorites.len()
            )));
        }
        if rec.referrers.len() > MAX_REFERRERS {
            return Err(Error::Validation(format!(
                "object {}: {} referrers exceed the limit of {}",
                rec.object_id,
                rec.referrers.len(),
                MAX_REFERRERS
            )));
        }
        let series = |values: Vec<f64>, what: &str| -> Result<TimeSeries> {
            TimeSeries::new(values, rec.window_days).map_err(|e| {
                Error::Validation(format!("object {}: invalid {what} series: {e}", rec.object_id))
            })
        };
        Ok(UGCObject {
            views: series(rec.views, "views")?,
            comments: series(rec.comments, "comments")?,
            favorites: series(rec.favorites, "favorites")?,
            object_id: rec.object_id,
            upload_date: rec.upload_date,
            category: rec.category,
            age_days: rec.age_days,
            window_days: rec.window_days,
            referrers: rec.referrers,
            template_label: rec.template_label,
        })
    }
}

impl UGCObject {
    pub fn series_len(&self) -> usize {
        self.views.len()
    }
}

fn days_since_epoch(date: NaiveDate) -> f64 {
    (date - NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()).num_days() as f64
}

/// Mean of consecutive differences over the first `t_r` windows; zero when
/// only one window has been seen.
fn change_rate(values: &[f64], t_r: usize) -> f64 {
    if t_r < 2 {
        return 0.0;
    }
    (values[t_r - 1] - values[0]) / (t_r - 1) as f64
}

fn peak_fraction_prefix(values: &[f64], t_r: usize) -> f64 {
    let total: f64 = values[..t_r].iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let max = values[..t_r].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max / total
}

/// Ordered names of the object features emitted by
/// [`compute_object_features`].
pub fn object_feature_names() -> Vec<String> {
    [
        "category",
        "upload_date_days",
        "age_days",
        "window_days",
        "referrer_first_date_days",
        "referrer_views",
        "cum_views",
        "cum_comments",
        "cum_favorites",
        "change_rate_views",
        "change_rate_comments",
        "change_rate_favorites",
        "peak_fraction_views",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// Split-time interpretation of the object features; `category_arity` is
/// the number of category codes in the dataset.
pub fn object_feature_schema(category_arity: u32) -> Vec<FeatureKind> {
    let mut schema = vec![FeatureKind::Categorical { arity: category_arity }];
    schema.extend(std::iter::repeat_n(FeatureKind::Numeric, 12));
    schema
}

/// Builds the object-feature vector using only windows `1..=t_r`.
///
/// The referrer pair is taken from the earliest referrer whose first date
/// falls within the monitored span (`t_r` windows after upload); when none
/// qualifies both fields carry the missing sentinel.
pub fn compute_object_features(obj: &UGCObject, t_r: usize) -> Result<FeatureVector> {
    let n = obj.series_len();
    if t_r < 1 || t_r > n {
        return Err(Error::InvalidPeriod(t_r));
    }

    let span_days = t_r as f64 * obj.window_days;
    let visible = obj
        .referrers
        .iter()
        .filter(|r| (r.first_date - obj.upload_date).num_days() as f64 <= span_days)
        .min_by(|a, b| a.first_date.cmp(&b.first_date).then(a.views.total_cmp(&b.views)));
    let (ref_date, ref_views) = match visible {
        Some(r) => (days_since_epoch(r.first_date), r.views),
        None => (MISSING_NUMERIC, MISSING_NUMERIC),
    };

    let values = vec![
        obj.category as f64,
        days_since_epoch(obj.upload_date),
        obj.age_days as f64,
        obj.window_days,
        ref_date,
        ref_views,
        obj.views.cumulative(t_r),
        obj.comments.cumulative(t_r),
        obj.favorites.cumulative(t_r),
        change_rate(obj.views.values(), t_r),
        change_rate(obj.comments.values(), t_r),
        change_rate(obj.favorites.values(), t_r),
        peak_fraction_prefix(obj.views.values(), t_r),
    ];
    Ok(FeatureVector::new(values))
}

//! Popularity-trend toolkit for user-generated content.
//!
//! The crate covers the full pipeline: shape/shift-invariant distance over
//! popularity time series, k-spectral-centroid clustering to extract trend
//! archetypes, online per-object trend classification with per-class
//! confidence and monitoring-period thresholds, an extremely randomized
//! trees ensemble combining class probabilities with object features, and
//! trend-specialized popularity regression.

pub mod classify;
pub mod cluster;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod forest;
pub mod metrics;
pub mod persist;
pub mod pipeline;
pub mod regression;
pub mod series;
pub mod synth;
pub mod ugc;

pub use error::{Error, ErrorCategory, Result};
pub use series::{dist, optimal_alpha, rolling_shift, Alignment, PopStream, TimeSeries};

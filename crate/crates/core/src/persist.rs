//! Versioned model files and the CSV formats produced by the CLI.
//!
//! All JSON documents carry a `version` field and serialize with fixed
//! field order, so identical runs produce byte-identical files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::{MonitorParams, ProbabilityMatrix};
use crate::cluster::ClusterModel;
use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::metrics::EvalReport;
use crate::pipeline::TrendLearnerModel;
use crate::regression::MrseRow;
use crate::series::TimeSeries;

pub const FORMAT_VERSION: u32 = 1;

fn check_version(version: u32, what: &str) -> Result<()> {
    if version != FORMAT_VERSION {
        return Err(Error::Validation(format!(
            "{what} file has version {version}, expected {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

#[derive(Debug, Serialize, Deserialize)]
struct BetaCvEntry {
    k: usize,
    beta_cv: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClusterModelDoc {
    k: usize,
    window_days: f64,
    centroids: Vec<Vec<f64>>,
    beta_cv_curve: Vec<BetaCvEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClusterModelFile {
    version: u32,
    #[serde(flatten)]
    doc: ClusterModelDoc,
}

fn cluster_to_doc(model: &ClusterModel) -> ClusterModelDoc {
    ClusterModelDoc {
        k: model.k,
        window_days: model.window_days,
        centroids: model.centroids.iter().map(|c| c.values().to_vec()).collect(),
        beta_cv_curve: model
            .beta_cv_curve
            .iter()
            .map(|(k, v)| BetaCvEntry { k: *k, beta_cv: *v })
            .collect(),
    }
}

fn cluster_from_doc(doc: ClusterModelDoc) -> ClusterModel {
    ClusterModel {
        k: doc.k,
        centroids: doc
            .centroids
            .into_iter()
            .map(|values| TimeSeries::from_raw(values, doc.window_days))
            .collect(),
        window_days: doc.window_days,
        assignments: Vec::new(),
        beta_cv_curve: doc.beta_cv_curve.into_iter().map(|e| (e.k, e.beta_cv)).collect(),
    }
}

/// Writes the trend model. Assignments are a training artifact and are
/// not part of the file format.
pub fn save_cluster_model(model: &ClusterModel, path: impl AsRef<Path>) -> Result<()> {
    write_json(&ClusterModelFile { version: FORMAT_VERSION, doc: cluster_to_doc(model) }, path.as_ref())
}

pub fn load_cluster_model(path: impl AsRef<Path>) -> Result<ClusterModel> {
    let file: ClusterModelFile = read_json(path.as_ref())?;
    check_version(file.version, "trend model")?;
    Ok(cluster_from_doc(file.doc))
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamsFile {
    version: u32,
    theta: Vec<f64>,
    gamma: Vec<usize>,
    gamma_max: usize,
    warned: Vec<bool>,
}

pub fn save_monitor_params(params: &MonitorParams, path: impl AsRef<Path>) -> Result<()> {
    write_json(
        &ParamsFile {
            version: FORMAT_VERSION,
            theta: params.theta.clone(),
            gamma: params.gamma.clone(),
            gamma_max: params.gamma_max,
            warned: params.warned.clone(),
        },
        path.as_ref(),
    )
}

pub fn load_monitor_params(path: impl AsRef<Path>) -> Result<MonitorParams> {
    let file: ParamsFile = read_json(path.as_ref())?;
    check_version(file.version, "monitor params")?;
    let mut params = MonitorParams::new(file.theta, file.gamma, file.gamma_max)?;
    params.warned = file.warned;
    Ok(params)
}

#[derive(Debug, Serialize, Deserialize)]
struct ForestFile {
    version: u32,
    forest: Forest,
}

/// Forest round trips preserve predictions bit-exactly: probabilities and
/// thresholds serialize through JSON's shortest-representation floats.
pub fn save_forest(forest: &Forest, path: impl AsRef<Path>) -> Result<()> {
    write_json(&ForestFile { version: FORMAT_VERSION, forest: forest.clone() }, path.as_ref())
}

pub fn load_forest(path: impl AsRef<Path>) -> Result<Forest> {
    let file: ForestFile = read_json(path.as_ref())?;
    check_version(file.version, "forest")?;
    Ok(file.forest)
}

#[derive(Debug, Serialize, Deserialize)]
struct BundleFile {
    version: u32,
    cluster_model: ClusterModelDoc,
    theta: Vec<f64>,
    gamma: Vec<usize>,
    gamma_max: usize,
    warned: Vec<bool>,
    forest: Forest,
    prob_only_forest: Forest,
    feature_only_forest: Forest,
    feature_layout: Vec<String>,
}

/// Writes the full pipeline bundle as a single versioned JSON document.
pub fn save_trendlearner_model(model: &TrendLearnerModel, path: impl AsRef<Path>) -> Result<()> {
    write_json(
        &BundleFile {
            version: FORMAT_VERSION,
            cluster_model: cluster_to_doc(&model.cluster_model),
            theta: model.params.theta.clone(),
            gamma: model.params.gamma.clone(),
            gamma_max: model.params.gamma_max,
            warned: model.params.warned.clone(),
            forest: model.forest.clone(),
            prob_only_forest: model.prob_only_forest.clone(),
            feature_only_forest: model.feature_only_forest.clone(),
            feature_layout: model.feature_layout.clone(),
        },
        path.as_ref(),
    )
}

pub fn load_trendlearner_model(path: impl AsRef<Path>) -> Result<TrendLearnerModel> {
    let file: BundleFile = read_json(path.as_ref())?;
    check_version(file.version, "pipeline bundle")?;
    let mut params = MonitorParams::new(file.theta, file.gamma, file.gamma_max)?;
    params.warned = file.warned;
    Ok(TrendLearnerModel {
        cluster_model: cluster_from_doc(file.cluster_model),
        params,
        forest: file.forest,
        prob_only_forest: file.prob_only_forest,
        feature_only_forest: file.feature_only_forest,
        feature_layout: file.feature_layout,
    })
}

/// One row of a predictions file: the monitoring output plus the final
/// label.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub object_id: String,
    pub t: usize,
    pub label: usize,
    pub probs: Vec<f64>,
    pub decided: bool,
}

/// Writes `object_id,t,label,p_class0..p_class{k-1},decided`.
pub fn write_predictions_csv(records: &[PredictionRecord], path: impl AsRef<Path>) -> Result<()> {
    let k = records.first().map_or(0, |r| r.probs.len());
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec!["object_id".to_string(), "t".to_string(), "label".to_string()];
    header.extend((0..k).map(|c| format!("p_class{c}")));
    header.push("decided".to_string());
    writer.write_record(&header)?;
    for r in records {
        let mut row = vec![r.object_id.clone(), r.t.to_string(), r.label.to_string()];
        row.extend(r.probs.iter().map(|p| format!("{p}")));
        row.push((r.decided as u8).to_string());
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_predictions_csv(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let k = headers.iter().filter(|h| h.starts_with("p_class")).count();
    let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let field = |idx: usize| -> Result<&str> {
            row.get(idx).ok_or_else(|| parse_err(line, format!("missing column {idx}")))
        };
        let mut probs = Vec::with_capacity(k);
        for c in 0..k {
            probs.push(
                field(3 + c)?
                    .parse::<f64>()
                    .map_err(|e| parse_err(line, e.to_string()))?,
            );
        }
        records.push(PredictionRecord {
            object_id: field(0)?.to_string(),
            t: field(1)?.parse().map_err(|e: std::num::ParseIntError| parse_err(line, e.to_string()))?,
            label: field(2)?.parse().map_err(|e: std::num::ParseIntError| parse_err(line, e.to_string()))?,
            probs,
            decided: field(3 + k)? == "1",
        });
    }
    Ok(records)
}

/// Writes `object_id,t,p_class0..p_class{k-1},decided` for a raw
/// probability matrix.
pub fn write_probability_matrix_csv(
    matrix: &ProbabilityMatrix,
    path: impl AsRef<Path>,
) -> Result<()> {
    let k = matrix.num_classes();
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec!["object_id".to_string(), "t".to_string()];
    header.extend((0..k).map(|c| format!("p_class{c}")));
    header.push("decided".to_string());
    writer.write_record(&header)?;
    for i in 0..matrix.num_objects() {
        let mut row = vec![matrix.object_ids[i].clone(), matrix.t[i].to_string()];
        row.extend(matrix.probs[i].iter().map(|p| format!("{p}")));
        row.push((matrix.decided[i] as u8).to_string());
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the beta_cv curve as `k,beta_cv`, leaving the value empty for
/// degenerate entries.
pub fn write_beta_cv_csv(curve: &[(usize, Option<f64>)], path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(["k", "beta_cv"])?;
    for (k, value) in curve {
        let rendered = value.map(|v| format!("{v}")).unwrap_or_default();
        writer.write_record([k.to_string(), rendered])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes `strategy,delta,mean,ci_halfwidth`. Rows aggregated over a
/// single run carry an empty half-width.
pub fn write_mrse_csv(
    rows: &[(MrseRow, Option<f64>)],
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(["strategy", "delta", "mean", "ci_halfwidth"])?;
    for (row, ci) in rows {
        writer.write_record([
            row.strategy.clone(),
            row.delta.to_string(),
            format!("{}", row.mrse),
            ci.map(|v| format!("{v}")).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_report(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    #[derive(Serialize)]
    struct ReportFile<'a> {
        version: u32,
        #[serde(flatten)]
        report: &'a EvalReport,
    }
    write_json(&ReportFile { version: FORMAT_VERSION, report }, path.as_ref())
}

/// Complementary cumulative distribution of remaining interest, one row
/// per observed value: `ri,ccdf`.
pub fn write_ri_ccdf_csv(ri_values: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let mut sorted = ri_values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(["ri", "ccdf"])?;
    for (i, ri) in sorted.iter().enumerate() {
        let ccdf = (sorted.len() - i) as f64 / n;
        writer.write_record([format!("{ri}"), format!("{ccdf}")])?;
    }
    writer.flush()?;
    Ok(())
}

/// Per-object scatter rows: `object_id,total_views,ri,correct`.
pub fn write_ri_scatter_csv(
    rows: &[(String, f64, f64, bool)],
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(["object_id", "total_views", "ri", "correct"])?;
    for (id, views, ri, correct) in rows {
        writer.write_record([
            id.clone(),
            format!("{views}"),
            format!("{ri}"),
            (*correct as u8).to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

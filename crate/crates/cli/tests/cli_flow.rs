//! End-to-end CLI flow on a small synthetic dataset: synth,
//! extract-trends, learn-params, train, predict, evaluate, regress.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trendlearner"))
}

fn run_ok(args: &[&str]) {
    let output = bin().args(args).output().expect("spawn CLI");
    assert!(
        output.status.success(),
        "command {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn full_pipeline_flow() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name);
    let arg = |p: &Path| p.to_str().unwrap().to_string();

    let config = path("synth.json");
    std::fs::write(
        &config,
        r#"{
            "count": 120,
            "seed": 9,
            "n": 40,
            "weights": [0.25, 0.25, 0.25, 0.25],
            "noise": 0.1,
            "peak_position": [0.12, 0.45],
            "growth_slope": [0.5, 1.5],
            "growth_intercept": 0.3,
            "peak_shapes": [
                {"rise_width": [2.5, 5.5], "decay_tau": [12.0, 26.0], "base_level": 0.02},
                {"rise_width": [0.8, 2.2], "decay_tau": [4.5, 9.5], "base_level": 0.006},
                {"rise_width": [0.4, 1.0], "decay_tau": [1.0, 2.6], "base_level": 0.003}
            ],
            "echo": {"probability": 1.0, "count": [1, 1], "energy_fraction": [0.5, 0.7], "width": [1.5, 2.5]},
            "blend": {"fraction": 0.12, "weight": [0.2, 0.4]},
            "volume_log_mean": 9.0,
            "volume_log_sigma": 1.0,
            "categories": 8,
            "category_skew": 0.55
        }"#,
    )
    .unwrap();

    let data = path("data.ndjson");
    run_ok(&["synth", "--config", &arg(&config), "--out", &arg(&data)]);
    assert!(data.exists());

    let trends = path("trends.json");
    run_ok(&[
        "extract-trends",
        "--input",
        &arg(&data),
        "--k-max",
        "6",
        "--seed",
        "3",
        "--out",
        &arg(&trends),
    ]);
    assert!(trends.exists());
    assert!(path("trends.beta_cv.csv").exists());

    let params = path("params.json");
    run_ok(&[
        "learn-params",
        "--input",
        &arg(&data),
        "--trends",
        &arg(&trends),
        "--target-macro-f1",
        "0.5",
        "--out",
        &arg(&params),
    ]);

    let model = path("tl.json");
    run_ok(&[
        "train",
        "--input",
        &arg(&data),
        "--trends",
        &arg(&trends),
        "--params",
        &arg(&params),
        "--seed",
        "3",
        "--out",
        &arg(&model),
    ]);

    let predictions = path("predictions.csv");
    run_ok(&["predict", "--input", &arg(&data), "--model", &arg(&model), "--out", &arg(&predictions)]);
    let header = std::fs::read_to_string(&predictions).unwrap();
    assert!(header.starts_with("object_id,t,label,p_class0"), "header: {}", &header[..60]);

    let report = path("report.json");
    run_ok(&[
        "evaluate",
        "--predictions",
        &arg(&predictions),
        "--truth",
        &arg(&data),
        "--out",
        &arg(&report),
    ]);
    assert!(path("report.ri_ccdf.csv").exists());
    assert!(path("report.ri_scatter.csv").exists());
    let report_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(report_json["micro_f1"].as_f64().unwrap() >= 0.0);

    let mrse = path("mrse.csv");
    run_ok(&[
        "regress",
        "--input",
        &arg(&data),
        "--model",
        &arg(&model),
        "--deltas",
        "1,5",
        "--out",
        &arg(&mrse),
    ]);
    let mrse_text = std::fs::read_to_string(&mrse).unwrap();
    assert!(mrse_text.starts_with("strategy,delta,mean,ci_halfwidth"));
    assert!(mrse_text.contains("specialized_ml"));
}

#[test]
fn determinism_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name);
    let arg = |p: &Path| p.to_str().unwrap().to_string();

    let config = path("synth.json");
    std::fs::write(
        &config,
        r#"{"count": 40, "seed": 11, "n": 24, "weights": [0.25, 0.25, 0.25, 0.25],
            "noise": 0.1, "peak_position": [0.12, 0.45], "growth_slope": [0.5, 1.5],
            "growth_intercept": 0.3,
            "peak_shapes": [
                {"rise_width": [2.5, 5.5], "decay_tau": [12.0, 26.0], "base_level": 0.02},
                {"rise_width": [0.8, 2.2], "decay_tau": [4.5, 9.5], "base_level": 0.006},
                {"rise_width": [0.4, 1.0], "decay_tau": [1.0, 2.6], "base_level": 0.003}
            ],
            "echo": {"probability": 1.0, "count": [1, 1], "energy_fraction": [0.5, 0.7], "width": [1.5, 2.5]},
            "blend": {"fraction": 0.12, "weight": [0.2, 0.4]},
            "volume_log_mean": 9.0, "volume_log_sigma": 1.0,
            "categories": 8, "category_skew": 0.55}"#,
    )
    .unwrap();

    for tag in ["a", "b"] {
        run_ok(&["synth", "--config", &arg(&config), "--out", &arg(&path(&format!("data_{tag}.ndjson")))]);
    }
    let a = std::fs::read(path("data_a.ndjson")).unwrap();
    let b = std::fs::read(path("data_b.ndjson")).unwrap();
    assert_eq!(a, b, "synth output differs across processes with the same seed");
}

#[test]
fn missing_input_maps_to_internal_error_and_bad_config_to_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.ndjson");
    // Config error: weights do not sum to 1.
    let config = dir.path().join("bad.json");
    std::fs::write(
        &config,
        r#"{"count": 5, "seed": 1, "n": 10, "weights": [0.9, 0.9, 0.0, 0.0],
            "noise": 0.1, "peak_position": [0.12, 0.45], "growth_slope": [0.5, 1.5],
            "growth_intercept": 0.3,
            "peak_shapes": [
                {"rise_width": [2.5, 5.5], "decay_tau": [12.0, 26.0], "base_level": 0.02},
                {"rise_width": [0.8, 2.2], "decay_tau": [4.5, 9.5], "base_level": 0.006},
                {"rise_width": [0.4, 1.0], "decay_tau": [1.0, 2.6], "base_level": 0.003}
            ],
            "echo": {"probability": 1.0, "count": [1, 1], "energy_fraction": [0.5, 0.7], "width": [1.5, 2.5]},
            "blend": {"fraction": 0.12, "weight": [0.2, 0.4]},
            "volume_log_mean": 9.0, "volume_log_sigma": 1.0,
            "categories": 8, "category_skew": 0.55}"#,
    )
    .unwrap();
    let output = bin()
        .args(["synth", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&output.stderr));
}

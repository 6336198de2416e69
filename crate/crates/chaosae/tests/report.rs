mod common;

use std::fs;

use chaosae::report::REPORT_SCHEMA;
use common::*;
use serde_json::Value;

fn validate(summary: &Value) {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> =
        validator.iter_errors(summary).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

fn summary(dir: &std::path::Path, out: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(out).join("report/summary.json")).unwrap()).unwrap()
}

#[test]
fn full_report_validates_against_schema() {
    let dir = tempfile::tempdir().unwrap();
    full_pipeline(dir.path(), "out");
    let s = summary(dir.path(), "out");
    validate(&s);
    assert_eq!(s["training"]["rossler"]["epochs"], 2);
    assert!(s["training"]["lorenz63"].is_null());
    assert_eq!(s["sweeps"]["alpha"]["rossler"]["cells"].as_array().unwrap().len(), 2);
    assert_eq!(s["sweeps"]["window"]["rossler"]["cells"][1]["value"], 12.0);
    assert_eq!(s["lle"]["input"].as_array().unwrap().len(), 2);
    assert_eq!(s["lle"]["reconstructed_alpha"].as_array().unwrap().len(), 4);
    assert_eq!(s["lle"]["reconstructed_window"][0]["alpha_or_W"], 9.0);
    let plots: Vec<&str> = s["plots"].as_array().unwrap().iter().map(|p| p.as_str().unwrap()).collect();
    for p in ["report/loss_rossler.svg", "report/nodes_alpha_rossler.svg", "report/divergence_rossler.svg"] {
        assert!(plots.contains(&p), "{p} not in {plots:?}");
        assert!(fs::read_to_string(dir.path().join("out").join(p)).unwrap().starts_with("<svg"));
    }
    let missing: Vec<&str> = s["missing"].as_array().unwrap().iter().map(|p| p.as_str().unwrap()).collect();
    assert!(missing.contains(&"train/lorenz63/summary.json"));
    assert!(!missing.iter().any(|m| m.contains("rossler")));
}

#[test]
fn partial_pipeline_reports_null_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    ok(&chaosae(&["report", "--config", cfg.to_str().unwrap(), "--out", "o", "-q"], dir.path()));
    let s = summary(dir.path(), "o");
    validate(&s);
    for stage in ["input", "reconstructed_alpha", "reconstructed_window"] {
        assert!(s["lle"][stage].is_null());
    }
    assert!(s["training"].as_object().unwrap().values().all(Value::is_null));
    assert!(s["plots"].as_array().unwrap().is_empty());
    assert_eq!(s["missing"].as_array().unwrap().len(), 3 + 3 + 3 + 3);

    ok(&chaosae(&["train", "--config", cfg.to_str().unwrap(), "--out", "o", "-q"], dir.path()));
    ok(&chaosae(&["report", "--config", cfg.to_str().unwrap(), "--out", "o", "-q"], dir.path()));
    let s = summary(dir.path(), "o");
    validate(&s);
    assert!(s["training"]["rossler"]["stats"]["mean_active_nodes"].is_number());
    assert!(s["sweeps"]["alpha"]["rossler"].is_null());
    assert_eq!(s["seeds"]["train"], 3);
}

#[test]
fn schema_rejects_malformed_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    ok(&chaosae(&["report", "--config", cfg.to_str().unwrap(), "--out", "o", "-q"], dir.path()));
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let good = summary(dir.path(), "o");
    assert!(validator.is_valid(&good));
    let mut bad = good.clone();
    bad.as_object_mut().unwrap().remove("lle");
    assert!(!validator.is_valid(&bad));
    let mut bad = good.clone();
    bad["lle"]["input"] = serde_json::json!([{ "system": "duffing" }]);
    assert!(!validator.is_valid(&bad));
    let mut bad = good;
    bad["format_version"] = 2.into();
    assert!(!validator.is_valid(&bad));
}

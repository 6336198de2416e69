use std::fs;
use std::path::Path;

use chaosae::formats::*;
use chaosae::HarnessError;
use chaosae_core::datapipe::{prepare_datasets, NormParams};
use chaosae_core::dynamics::{integrate, IntegrationConfig, SystemSpec};
use chaosae_core::nn::{evaluate, forward, train, Architecture, AutoencoderModel, TrainConfig};

fn trained_model() -> (AutoencoderModel, chaosae_core::datapipe::WindowedDataset, TrainConfig) {
    let cfg = IntegrationConfig { total_steps: 3000, transient_steps: 500, ..Default::default() };
    let traj = integrate(&SystemSpec::lorenz63(), &cfg).unwrap();
    let (tr, te) = prepare_datasets(&traj.coordinate(0).unwrap(), 16, 2, 0.8, 0).unwrap();
    let tc = TrainConfig { epochs: 2, seed: 11, ..Default::default() };
    let model = AutoencoderModel::new(&Architecture::scaled(16), tr.norm, tc.seed).unwrap();
    let (model, _) = train(model, &tr, &te, &tc).unwrap();
    (model, te, tc)
}

#[test]
fn model_round_trip_is_bit_identical() {
    let (model, test, tc) = trained_model();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m/model.json");
    save_model(&path, &model, Some(&tc)).unwrap();
    let (back, echo) = load_model(&path).unwrap();
    assert_eq!(back, model);
    assert_eq!(echo, Some(tc.clone()));
    let a = forward(&model, &test.windows).unwrap();
    let b = forward(&back, &test.windows).unwrap();
    assert_eq!(a.output().as_slice(), b.output().as_slice());
    assert_eq!(evaluate(&model, &test.windows).unwrap(), evaluate(&back, &test.windows).unwrap());
    // saving again reproduces the same bytes
    let again = dir.path().join("again.json");
    save_model(&again, &back, Some(&tc)).unwrap();
    assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn model_file_layout() {
    let (model, _, tc) = trained_model();
    let v: serde_json::Value = serde_json::from_str(&model_to_json(&model, Some(&tc))).unwrap();
    assert_eq!(v["format_version"], MODEL_FORMAT_VERSION);
    assert_eq!(v["latent_layer_index"], 2);
    let specs = v["layer_specs"].as_array().unwrap();
    assert_eq!(specs.len(), 6);
    assert_eq!(specs[0]["input_size"], 16);
    assert_eq!(specs[0]["activation"], "sigmoid");
    assert_eq!(specs[5]["activation"], "linear");
    let w0 = v["weights"][0].as_array().unwrap();
    assert_eq!(w0.len(), 16 * 12);
    // row-major `input × output`
    assert_eq!(w0[13].as_f64().unwrap(), model.layers()[0].weights.get(1, 1));
    assert!(v["norm"]["min"].is_f64() && v["norm"]["max"].is_f64());
    assert_eq!(v["train_config_echo"]["seed"], 11);
}

#[test]
fn truncated_model_is_a_parse_error_with_offset() {
    let (model, _, _) = trained_model();
    let text = model_to_json(&model, None);
    let cut = &text[..text.len() / 2];
    match model_from_json(cut, Path::new("m.json")) {
        Err(HarnessError::Parse { offset, .. }) => assert!(offset > 0 && offset <= cut.len()),
        other => panic!("{other:?}"),
    }
    assert!(matches!(model_from_json("", Path::new("m.json")), Err(HarnessError::Parse { offset: 0, .. })));
    let wrong_type = text.replacen("\"latent_layer_index\": 2", "\"latent_layer_index\": \"two\"", 1);
    match model_from_json(&wrong_type, Path::new("m.json")) {
        Err(HarnessError::Parse { offset, .. }) => {
            assert!(wrong_type[..offset].contains("latent_layer_index"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn version_mismatch_is_explicit() {
    let (model, _, _) = trained_model();
    let text = model_to_json(&model, None).replacen("\"format_version\": 1", "\"format_version\": 7", 1);
    match model_from_json(&text, Path::new("m.json")) {
        Err(e @ HarnessError::UnsupportedVersion { found: 7, expected: 1, .. }) => assert_eq!(e.exit_code(), 3),
        other => panic!("{other:?}"),
    }
    let text = model_to_json(&model, None).replacen("\"format_version\": 1,", "", 1);
    assert!(matches!(model_from_json(&text, Path::new("m.json")), Err(HarnessError::Parse { .. })));
}

#[test]
fn inconsistent_layers_are_rejected() {
    let (model, _, _) = trained_model();
    let mut v: serde_json::Value = serde_json::from_str(&model_to_json(&model, None)).unwrap();
    v["weights"][1].as_array_mut().unwrap().pop();
    let err = model_from_json(&v.to_string(), Path::new("m.json")).unwrap_err();
    assert!(matches!(err, HarnessError::Parse { .. }), "{err:?}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn trajectory_csv_round_trip_is_exact() {
    let cfg = IntegrationConfig { total_steps: 700, transient_steps: 200, ..Default::default() };
    let traj = integrate(&SystemSpec::Lorenz96 { n: 5, forcing: 8.15 }, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_trajectory_csv(&path, &traj).unwrap();
    let back = read_trajectory_csv(&path).unwrap();
    assert_eq!((back.rows(), back.cols()), (500, 5));
    assert_eq!(back.as_slice(), traj.as_flat());
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t,x0,x1,x2,x3,x4\n1,"));
}

#[test]
fn dataset_round_trip_and_sidecar() {
    let series: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin() * 3.0 + 1.0).collect();
    let (tr, _) = prepare_datasets(&series, 9, 3, 0.75, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.csv");
    write_dataset(&path, &tr).unwrap();
    assert_eq!(read_dataset(&path).unwrap(), tr);
    let side: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("train.json")).unwrap()).unwrap();
    assert_eq!(side["W"], 9);
    assert_eq!(side["stride"], 3);
    assert_eq!(side["source_coordinate"], 2);
    assert_eq!(side["norm"]["min"].as_f64().unwrap(), tr.norm.min);

    fs::write(&path, "0.5,0.5\n").unwrap();
    assert!(matches!(read_dataset(&path), Err(HarnessError::Parse { .. })));
    let mut row = ["0.5"; 9];
    row[4] = "1.5";
    fs::write(&path, row.join(",") + "\n").unwrap();
    assert!(matches!(read_dataset(&path), Err(HarnessError::Parse { .. })));
    let _ = NormParams::new(0.0, 1.0).unwrap();
}

#[test]
fn loss_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("loss.csv");
    let rows = vec![
        LossRow { epoch: 1, train_loss: 0.5, test_loss: 0.25, test_mse: 0.125 },
        LossRow { epoch: 2, train_loss: 0.1, test_loss: 0.05, test_mse: 0.04 },
    ];
    write_loss_csv(&path, &rows).unwrap();
    assert_eq!(
        fs::read_to_string(&path).unwrap(),
        "epoch,train_loss,test_loss,test_mse\n1,0.5,0.25,0.125\n2,0.1,0.05,0.04\n"
    );
    assert_eq!(read_csv_rows::<LossRow>(&path).unwrap(), rows);
}

//! On-disk formats: trajectory/dataset/loss/sweep/LLE CSVs, JSON sidecars,
//! model files and two-column `.dat` plot data.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chaosae_core::datapipe::{NormParams, WindowedDataset};
use chaosae_core::dynamics::{SystemSpec, Trajectory};
use chaosae_core::nn::{AutoencoderModel, EpochRecord, Layer, LayerSpec, TrainConfig};
use chaosae_core::Matrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HarnessError, Result};

pub const MODEL_FORMAT_VERSION: u64 = 1;

/// Converts a serde_json error into a parse error carrying a byte offset into `text`.
pub fn parse_error(path: &Path, text: &str, err: &serde_json::Error) -> HarnessError {
    HarnessError::Parse {
        path: path.to_path_buf(),
        offset: byte_offset(text, err.line(), err.column()),
        message: err.to_string(),
    }
}

/// serde_json reports 1-based lines and byte columns; column 0 means the
/// error sits before the line's first byte.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(HarnessError::Missing(path.display().to_string()));
    }
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| parse_error(path, &text, &e))
}

fn csv_error(path: &Path, e: csv::Error) -> HarnessError {
    let offset = e.position().map_or(0, |p| p.byte() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        kind => HarnessError::Parse { path: path.to_path_buf(), offset, message: format!("{kind:?}") },
    }
}

pub fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_csv_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(HarnessError::Missing(path.display().to_string()));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

/// Two whitespace-separated columns, one point per line.
pub fn write_dat(path: &Path, points: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
    let mut out = Vec::new();
    for (x, y) in points {
        writeln!(out, "{x} {y}").expect("write to Vec");
    }
    write_bytes(path, &out)
}

pub fn read_dat(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = read_text(path)?;
    let mut offset = 0;
    let mut points = Vec::new();
    for line in text.split_inclusive('\n') {
        let mut cols = line.split_whitespace().map(str::parse::<f64>);
        match (cols.next(), cols.next(), cols.next()) {
            (None, ..) => {}
            (Some(Ok(x)), Some(Ok(y)), None) => points.push((x, y)),
            _ => {
                return Err(HarnessError::Parse {
                    path: path.to_path_buf(),
                    offset,
                    message: "expected two numeric columns".into(),
                })
            }
        }
        offset += line.len();
    }
    Ok(points)
}

// ---- trajectories ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub system: SystemSpec,
    pub dt: f64,
    pub first_step: usize,
    pub rows: usize,
    pub total_steps: usize,
    pub transient_steps: usize,
    pub initial_state: Vec<f64>,
    pub seed: u64,
}

/// `t,x0,x1,...` with `t = step_index · dt`.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = Vec::with_capacity(traj.rows() * traj.dim() * 20);
    out.extend_from_slice(b"t");
    for c in 0..traj.dim() {
        write!(out, ",x{c}").expect("write to Vec");
    }
    out.push(b'\n');
    for i in 0..traj.rows() {
        write!(out, "{}", traj.time(i)).expect("write to Vec");
        for v in traj.row(i) {
            write!(out, ",{v}").expect("write to Vec");
        }
        out.push(b'\n');
    }
    write_bytes(path, &out)
}

/// Reads the state columns of a trajectory CSV (the `t` column is dropped).
pub fn read_trajectory_csv(path: &Path) -> Result<Matrix> {
    if !path.exists() {
        return Err(HarnessError::Missing(path.display().to_string()));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let dim = r.headers().map_err(|e| csv_error(path, e))?.len().saturating_sub(1);
    if dim == 0 {
        return Err(HarnessError::Parse { path: path.to_path_buf(), offset: 0, message: "no state columns".into() });
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let offset = rec.position().map_or(0, |p| p.byte() as usize);
        for field in rec.iter().skip(1) {
            let v = field.parse::<f64>().map_err(|e| HarnessError::Parse {
                path: path.to_path_buf(),
                offset,
                message: format!("'{field}': {e}"),
            })?;
            data.push(v);
        }
        rows += 1;
    }
    Ok(Matrix::from_vec(rows, dim, data)?)
}

// ---- windowed datasets ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    #[serde(rename = "W")]
    pub window_size: usize,
    pub stride: usize,
    pub norm: NormParams,
    pub source_coordinate: usize,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// One window per row (no header) plus a `.json` sidecar next to it.
pub fn write_dataset(path: &Path, ds: &WindowedDataset) -> Result<()> {
    let mut out = Vec::with_capacity(ds.windows.as_slice().len() * 20);
    for row in ds.windows.iter_rows() {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(b',');
            }
            write!(out, "{v}").expect("write to Vec");
        }
        out.push(b'\n');
    }
    write_bytes(path, &out)?;
    let meta = DatasetSidecar {
        window_size: ds.window_size,
        stride: ds.stride,
        norm: ds.norm,
        source_coordinate: ds.source_coordinate,
    };
    write_json(&sidecar_path(path), &meta)
}

pub fn read_dataset(path: &Path) -> Result<WindowedDataset> {
    let meta: DatasetSidecar = read_json(&sidecar_path(path))?;
    if !path.exists() {
        return Err(HarnessError::Missing(path.display().to_string()));
    }
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path).map_err(|e| csv_error(path, e))?;
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let offset = rec.position().map_or(0, |p| p.byte() as usize);
        if rec.len() != meta.window_size {
            return Err(HarnessError::Parse {
                path: path.to_path_buf(),
                offset,
                message: format!("expected {} values, found {}", meta.window_size, rec.len()),
            });
        }
        for field in rec.iter() {
            let v: f64 = field.parse().map_err(|e| HarnessError::Parse {
                path: path.to_path_buf(),
                offset,
                message: format!("'{field}': {e}"),
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(HarnessError::Parse {
                    path: path.to_path_buf(),
                    offset,
                    message: format!("value {v} outside [0, 1]"),
                });
            }
            data.push(v);
        }
        rows += 1;
    }
    meta.norm.validate()?;
    Ok(WindowedDataset {
        windows: Matrix::from_vec(rows, meta.window_size, data)?,
        window_size: meta.window_size,
        stride: meta.stride,
        norm: meta.norm,
        source_coordinate: meta.source_coordinate,
    })
}

// ---- models ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelFile {
    format_version: u64,
    layer_specs: Vec<LayerSpec>,
    /// Row-major `input_size × output_size` per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    latent_layer_index: usize,
    norm: NormParams,
    train_config_echo: Option<TrainConfig>,
}

pub fn model_to_json(model: &AutoencoderModel, train_config: Option<&TrainConfig>) -> String {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        layer_specs: model.layers().iter().map(|l| l.spec).collect(),
        weights: model.layers().iter().map(|l| l.weights.as_slice().to_vec()).collect(),
        biases: model.layers().iter().map(|l| l.bias.clone()).collect(),
        latent_layer_index: model.latent_layer_index(),
        norm: model.norm,
        train_config_echo: train_config.cloned(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("model serializes");
    text.push('\n');
    text
}

pub fn save_model(path: &Path, model: &AutoencoderModel, train_config: Option<&TrainConfig>) -> Result<()> {
    write_bytes(path, model_to_json(model, train_config).as_bytes())
}

/// Parses a model file. Syntax errors carry a byte offset; a missing or
/// different `format_version` is reported before any field is interpreted.
pub fn model_from_json(text: &str, path: &Path) -> Result<(AutoencoderModel, Option<TrainConfig>)> {
    let value: Value = serde_json::from_str(text).map_err(|e| parse_error(path, text, &e))?;
    let found = value.get("format_version").and_then(Value::as_u64).ok_or_else(|| HarnessError::Parse {
        path: path.to_path_buf(),
        offset: 0,
        message: "missing integer field 'format_version'".into(),
    })?;
    if found != MODEL_FORMAT_VERSION {
        return Err(HarnessError::UnsupportedVersion {
            path: path.to_path_buf(),
            found,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_str(text).map_err(|e| parse_error(path, text, &e))?;
    let n = file.layer_specs.len();
    if file.weights.len() != n || file.biases.len() != n {
        return Err(HarnessError::Parse {
            path: path.to_path_buf(),
            offset: 0,
            message: format!("{n} layer specs but {} weight and {} bias arrays", file.weights.len(), file.biases.len()),
        });
    }
    let malformed =
        |e: chaosae_core::Error| HarnessError::Parse { path: path.to_path_buf(), offset: 0, message: e.to_string() };
    let layers = file
        .layer_specs
        .into_iter()
        .zip(file.weights)
        .zip(file.biases)
        .map(|((spec, w), bias)| {
            Ok(Layer {
                weights: Matrix::from_vec(spec.input_size, spec.output_size, w).map_err(malformed)?,
                bias,
                spec,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let model = AutoencoderModel::from_layers(layers, file.latent_layer_index, file.norm).map_err(malformed)?;
    Ok((model, file.train_config_echo))
}

pub fn load_model(path: &Path) -> Result<(AutoencoderModel, Option<TrainConfig>)> {
    let text = read_text(path)?;
    model_from_json(&text, path)
}

// ---- loss curves ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    /// Reconstruction part of the test loss, without the L1 term.
    pub test_mse: f64,
}

impl From<&EpochRecord> for LossRow {
    fn from(r: &EpochRecord) -> Self {
        LossRow { epoch: r.epoch, train_loss: r.train_loss, test_loss: r.test_loss, test_mse: r.test_mse }
    }
}

/// `epoch,train_loss,test_loss,test_mse`; header only for an empty curve.
pub fn write_loss_csv(path: &Path, rows: &[LossRow]) -> Result<()> {
    if rows.is_empty() {
        return write_bytes(path, b"epoch,train_loss,test_loss,test_mse\n");
    }
    write_csv_rows(path, rows)
}

// ---- sweeps ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha_or_w: f64,
    pub mean_active: Option<f64>,
    pub std_active: Option<f64>,
    pub test_mse: Option<f64>,
    pub test_total_loss: Option<f64>,
}

const SWEEP_HEADER: &str = "alpha_or_W,mean_active,std_active,test_mse,test_total_loss";

/// Failed cells keep their grid value and leave the measurements empty.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.alpha_or_w,
            opt(r.mean_active),
            opt(r.std_active),
            opt(r.test_mse),
            opt(r.test_total_loss)
        ));
    }
    write_bytes(path, out.as_bytes())
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let text = read_text(path)?;
    let mut lines = text.split_inclusive('\n');
    let header = lines.next().unwrap_or("");
    if header.trim_end() != SWEEP_HEADER {
        return Err(HarnessError::Parse {
            path: path.to_path_buf(),
            offset: 0,
            message: "unexpected sweep header".into(),
        });
    }
    let mut offset = header.len();
    let mut rows = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        let bad = |m: String| HarnessError::Parse { path: path.to_path_buf(), offset, message: m };
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("'{s}': {e}")));
        let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
        rows.push(SweepRow {
            alpha_or_w: num(fields[0])?,
            mean_active: opt(fields[1])?,
            std_active: opt(fields[2])?,
            test_mse: opt(fields[3])?,
            test_total_loss: opt(fields[4])?,
        });
        offset += line.len();
    }
    Ok(rows)
}

// ---- LLE tables ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LleRow {
    pub system: String,
    /// `input` or `reconstructed`.
    pub sequence: String,
    /// Empty for input rows.
    #[serde(rename = "alpha_or_W")]
    pub alpha_or_w: Option<f64>,
    pub coordinate: String,
    pub lle_mean: f64,
    pub lle_std: f64,
    pub fit_start: usize,
    pub fit_end: usize,
    #[serde(rename = "M")]
    pub num_curves: usize,
}

pub fn write_lle_csv(path: &Path, rows: &[LleRow]) -> Result<()> {
    if rows.is_empty() {
        return write_bytes(path, b"system,sequence,alpha_or_W,coordinate,lle_mean,lle_std,fit_start,fit_end,M\n");
    }
    write_csv_rows(path, rows)
}

pub fn read_lle_csv(path: &Path) -> Result<Vec<LleRow>> {
    read_csv_rows(path)
}

/// Table-style layout: one row per `(sequence, alpha_or_W)`, one
/// `mean (std)` column per `system coordinate`, in first-seen order.
pub fn write_lle_table(path: &Path, rows: &[LleRow]) -> Result<()> {
    let mut columns: Vec<(String, String)> = Vec::new();
    let mut keys: Vec<(String, Option<f64>)> = Vec::new();
    for r in rows {
        let col = (r.system.clone(), r.coordinate.clone());
        if !columns.contains(&col) {
            columns.push(col);
        }
        let key = (r.sequence.clone(), r.alpha_or_w);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["sequence".to_string(), "alpha_or_W".to_string()];
    header.extend(columns.iter().map(|(s, c)| format!("{s} {c}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (seq, cell) in &keys {
        let mut record = vec![seq.clone(), cell.map_or_else(String::new, |v| v.to_string())];
        for (sys, coord) in &columns {
            let found = rows
                .iter()
                .find(|r| &r.sequence == seq && r.alpha_or_w == *cell && &r.system == sys && &r.coordinate == coord);
            record.push(found.map_or_else(String::new, |r| format!("{:.2} ({:.2})", r.lle_mean, r.lle_std)));
        }
        w.write_record(&record).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_from_line_and_column() {
        let text = "{\n  \"a\": 1,\n  \"b\": ]\n}";
        let err = serde_json::from_str::<Value>(text).unwrap_err();
        assert_eq!(&text[byte_offset(text, err.line(), err.column())..][..1], "]");
    }

    #[test]
    fn dat_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.dat");
        let pts = vec![(1e-3, 4.25), (1e-8, 0.1 + 0.2)];
        write_dat(&p, pts.clone()).unwrap();
        assert_eq!(read_dat(&p).unwrap(), pts);
        fs::write(&p, "1 2\n3 x\n").unwrap();
        assert!(matches!(read_dat(&p), Err(HarnessError::Parse { offset: 4, .. })));
    }

    #[test]
    fn sweep_rows_with_failures() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let rows = vec![
            SweepRow {
                alpha_or_w: 1e-3,
                mean_active: Some(2.5),
                std_active: Some(0.5),
                test_mse: Some(1e-4),
                test_total_loss: Some(2e-4),
            },
            SweepRow { alpha_or_w: 1e-8, mean_active: None, std_active: None, test_mse: None, test_total_loss: None },
        ];
        write_sweep_csv(&p, &rows).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("alpha_or_W,mean_active,std_active,test_mse,test_total_loss\n0.001,2.5,"));
        assert!(text.ends_with("\n0.00000001,,,,\n"));
        assert_eq!(read_sweep_csv(&p).unwrap(), rows);
    }

    #[test]
    fn lle_long_and_wide() {
        let dir = tempfile::tempdir().unwrap();
        let row = |sys: &str, seq: &str, cell: Option<f64>, c: &str, m: f64| LleRow {
            system: sys.into(),
            sequence: seq.into(),
            alpha_or_w: cell,
            coordinate: c.into(),
            lle_mean: m,
            lle_std: 0.126,
            fit_start: 0,
            fit_end: 900,
            num_curves: 5,
        };
        let rows = vec![
            row("rossler", "input", None, "X", 0.07),
            row("lorenz63", "input", None, "X", 0.9),
            row("rossler", "reconstructed", Some(1e-5), "X", 0.071),
        ];
        let long = dir.path().join("l.csv");
        write_lle_csv(&long, &rows).unwrap();
        let text = fs::read_to_string(&long).unwrap();
        assert!(text.starts_with("system,sequence,alpha_or_W,coordinate,lle_mean,lle_std,fit_start,fit_end,M\n"));
        assert_eq!(read_lle_csv(&long).unwrap(), rows);

        let wide = dir.path().join("w.csv");
        write_lle_table(&wide, &rows).unwrap();
        let text = fs::read_to_string(&wide).unwrap();
        assert_eq!(
            text,
            "sequence,alpha_or_W,rossler X,lorenz63 X\ninput,,0.07 (0.13),0.90 (0.13)\nreconstructed,0.00001,0.07 (0.13),\n"
        );
    }
}

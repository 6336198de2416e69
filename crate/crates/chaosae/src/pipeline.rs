//! End-to-end stages behind the CLI subcommands.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! trajectories/<system>.csv, <system>.meta.json
//! train/<system>/model.json, loss.csv, train_loss.dat, test_loss.dat, summary.json
//! sweep_<alpha|window>/<system>/sweep.csv, sweep.meta.json, *.dat, cells/<cell>/...
//! lle/<input|reconstructed_alpha|reconstructed_window>.csv, *_table.csv, *.meta.json, curves/*.dat
//! report/summary.json, *.svg
//! ```

use std::path::{Path, PathBuf};

use chaosae_core::datapipe::{prepare_datasets, NormParams};
use chaosae_core::dynamics::{integrate, IntegrationConfig, SystemSpec};
use chaosae_core::latent::{latent_stats, sweep_alpha, sweep_window, LatentStats, SweepCell};
use chaosae_core::lyapunov::{divergence_curve, lle_from_series_pairs, twin_pairs, LleEstimate};
use chaosae_core::nn::{
    reconstruct_series_with_norm, train_with_progress, Architecture, AutoencoderModel, TrainConfig,
};
use serde::{Deserialize, Serialize};

use crate::config::{coordinate_label, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::formats::{self, LleRow, LossRow, SweepRow, TrajectoryMeta};

/// Progress sink; the CLI prints to stderr, tests discard.
pub type Log<'a> = &'a mut dyn FnMut(&str);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    Alpha,
    Window,
}

impl SweepMode {
    pub fn name(self) -> &'static str {
        match self {
            SweepMode::Alpha => "alpha",
            SweepMode::Window => "window",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum LleMode {
    Input,
    Reconstructed,
}

/// Paths of every artifact under one output root.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn trajectory_csv(&self, spec: &SystemSpec) -> PathBuf {
        self.root.join("trajectories").join(format!("{}.csv", spec.name()))
    }

    pub fn trajectory_meta(&self, spec: &SystemSpec) -> PathBuf {
        self.root.join("trajectories").join(format!("{}.meta.json", spec.name()))
    }

    pub fn train_dir(&self, spec: &SystemSpec) -> PathBuf {
        self.root.join("train").join(spec.name())
    }

    pub fn sweep_dir(&self, mode: SweepMode, system: &str) -> PathBuf {
        self.root.join(format!("sweep_{}", mode.name())).join(system)
    }

    pub fn cell_dir(&self, mode: SweepMode, system: &str, value: f64) -> PathBuf {
        self.sweep_dir(mode, system).join("cells").join(cell_label(mode, value))
    }

    pub fn lle_dir(&self) -> PathBuf {
        self.root.join("lle")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }
}

/// `alpha_1e-5` or `W_30`.
pub fn cell_label(mode: SweepMode, value: f64) -> String {
    match mode {
        SweepMode::Alpha => format!("alpha_{value:e}"),
        SweepMode::Window => format!("W_{value}"),
    }
}

/// Integration settings for `spec`; a configured initial state only
/// applies to the configured system.
pub fn integration_for(cfg: &ExperimentConfig, spec: &SystemSpec) -> IntegrationConfig {
    let mut integ = cfg.integration.clone();
    if spec != &cfg.system {
        integ.initial_state = None;
    }
    integ
}

fn trajectory_meta(spec: &SystemSpec, integ: &IntegrationConfig) -> TrajectoryMeta {
    TrajectoryMeta {
        system: spec.clone(),
        dt: integ.dt,
        first_step: integ.transient_steps,
        rows: integ.retained_steps(),
        total_steps: integ.total_steps,
        transient_steps: integ.transient_steps,
        initial_state: integ.initial_state_for(spec),
        seed: integ.seed,
    }
}

/// Retained series of the requested coordinates, read from a previously
/// simulated trajectory when its metadata matches, integrated otherwise.
pub fn coordinate_columns(
    layout: &Layout,
    spec: &SystemSpec,
    integ: &IntegrationConfig,
    coords: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let meta_path = layout.trajectory_meta(spec);
    if meta_path.exists() {
        let meta: TrajectoryMeta = formats::read_json(&meta_path)?;
        if meta == trajectory_meta(spec, integ) {
            let states = formats::read_trajectory_csv(&layout.trajectory_csv(spec))?;
            if states.rows() == meta.rows && states.cols() == spec.dim() {
                return Ok(coords.iter().map(|&c| states.iter_rows().map(|r| r[c]).collect()).collect());
            }
        }
    }
    let traj = integrate(spec, integ)?;
    coords.iter().map(|&c| Ok(traj.coordinate(c)?)).collect()
}

// ---- simulate ----

pub fn run_simulate(cfg: &ExperimentConfig, log: Log) -> Result<PathBuf> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.output_dir);
    let integ = integration_for(cfg, &cfg.system);
    log(&format!("integrating {} for {} steps", cfg.system.name(), integ.total_steps));
    let traj = integrate(&cfg.system, &integ)?;
    let path = layout.trajectory_csv(&cfg.system);
    formats::write_trajectory_csv(&path, &traj)?;
    formats::write_json(&layout.trajectory_meta(&cfg.system), &trajectory_meta(&cfg.system, &integ))?;
    log(&format!("wrote {} rows to {}", traj.rows(), path.display()));
    Ok(path)
}

// ---- train ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub system: SystemSpec,
    pub coordinate: usize,
    pub window_size: usize,
    pub stride: usize,
    pub train_windows: usize,
    pub test_windows: usize,
    pub epochs: usize,
    pub seed: u64,
    pub final_test_mse: f64,
    pub stats: LatentStats,
    pub architecture: Architecture,
}

fn progress_every(epochs: usize) -> usize {
    (epochs / 20).max(1)
}

fn write_loss_files(dir: &Path, rows: &[LossRow]) -> Result<()> {
    formats::write_loss_csv(&dir.join("loss.csv"), rows)?;
    formats::write_dat(&dir.join("train_loss.dat"), rows.iter().map(|r| (r.epoch as f64, r.train_loss)))?;
    formats::write_dat(&dir.join("test_loss.dat"), rows.iter().map(|r| (r.epoch as f64, r.test_loss)))
}

/// Trains one model on the configured system and coordinate.
///
/// With `save_datasets`, the train and test windows are exported as well.
pub fn run_train(cfg: &ExperimentConfig, save_datasets: bool, log: Log) -> Result<TrainSummary> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.output_dir);
    let coord = cfg.training_coordinate()?;
    let integ = integration_for(cfg, &cfg.system);
    let series = coordinate_columns(&layout, &cfg.system, &integ, &[coord])?.remove(0);
    let (train_set, test_set) = prepare_datasets(&series, cfg.window_size, cfg.stride, cfg.train_fraction, coord)?;
    let dir = layout.train_dir(&cfg.system);
    formats::ensure_dir(&dir)?;
    if save_datasets {
        formats::write_dataset(&dir.join("train_windows.csv"), &train_set)?;
        formats::write_dataset(&dir.join("test_windows.csv"), &test_set)?;
    }
    let arch = cfg.architecture(cfg.window_size);
    let model = AutoencoderModel::new(&arch, train_set.norm, cfg.train.seed)?;
    log(&format!(
        "training {} coordinate {coord}: {} train / {} test windows, {} epochs",
        cfg.system.name(),
        train_set.len(),
        test_set.len(),
        cfg.train.epochs
    ));
    let every = progress_every(cfg.train.epochs);
    let mut rows = Vec::with_capacity(cfg.train.epochs);
    let (model, report) = train_with_progress(model, &train_set, &test_set, &cfg.train, |r| {
        rows.push(LossRow::from(r));
        if r.epoch % every == 0 || r.epoch == cfg.train.epochs {
            log(&format!(
                "epoch {} train {:.3e} test {:.3e} mse {:.3e}",
                r.epoch, r.train_loss, r.test_loss, r.test_mse
            ));
        }
    })?;
    let stats = latent_stats(&model, &test_set, cfg.train.alpha)?;
    formats::save_model(&dir.join("model.json"), &model, Some(&cfg.train))?;
    write_loss_files(&dir, &rows)?;
    let summary = TrainSummary {
        system: cfg.system.clone(),
        coordinate: coord,
        window_size: cfg.window_size,
        stride: cfg.stride,
        train_windows: train_set.len(),
        test_windows: test_set.len(),
        epochs: cfg.train.epochs,
        seed: cfg.train.seed,
        final_test_mse: report.final_test_mse,
        stats,
        architecture: arch,
    };
    formats::write_json(&dir.join("summary.json"), &summary)?;
    log(&format!(
        "test mse {:.3e}, active latent nodes {:.2} ± {:.2}",
        summary.final_test_mse, summary.stats.mean_active_nodes, summary.stats.std_active_nodes
    ));
    Ok(summary)
}

// ---- sweeps ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCellMeta {
    pub value: f64,
    pub label: String,
    pub architecture: Architecture,
    /// `None` on success.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub system: SystemSpec,
    pub mode: SweepMode,
    pub coordinate: usize,
    pub seed: u64,
    pub epochs: usize,
    pub alpha: Option<f64>,
    pub window_size: Option<usize>,
    pub stride: usize,
    pub cells: Vec<SweepCellMeta>,
}

impl SweepMeta {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }
}

/// Trains one model per grid value; failed cells are recorded and skipped.
pub fn run_sweep(cfg: &ExperimentConfig, mode: SweepMode, log: Log) -> Result<SweepMeta> {
    cfg.validate()?;
    match mode {
        SweepMode::Alpha => cfg.validate_alpha_grid()?,
        SweepMode::Window => cfg.validate_window_grid()?,
    }
    let layout = Layout::new(&cfg.output_dir);
    let system = cfg.system.name();
    let coord = cfg.training_coordinate()?;
    let integ = integration_for(cfg, &cfg.system);
    let series = coordinate_columns(&layout, &cfg.system, &integ, &[coord])?.remove(0);

    log(&format!("{} sweep on {system}, {} epochs per cell", mode.name(), cfg.train.epochs));
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let mut write_err = None;
    let mut on_cell = |_: usize, cell: &SweepCell| {
        let value = match mode {
            SweepMode::Alpha => cell.alpha,
            SweepMode::Window => cell.window_size as f64,
        };
        let label = cell_label(mode, value);
        let mut error = None;
        match &cell.outcome {
            Ok(res) => {
                let dir = layout.cell_dir(mode, system, value);
                let cell_cfg = TrainConfig { alpha: cell.alpha, ..cfg.train.clone() };
                let loss: Vec<LossRow> = (0..res.report.train_loss.len())
                    .map(|i| LossRow {
                        epoch: i + 1,
                        train_loss: res.report.train_loss[i],
                        test_loss: res.report.test_loss[i],
                        test_mse: res.report.test_mse[i],
                    })
                    .collect();
                let written = formats::save_model(&dir.join("model.json"), &res.model, Some(&cell_cfg))
                    .and_then(|_| write_loss_files(&dir, &loss))
                    .and_then(|_| formats::write_json(&dir.join("stats.json"), &res.stats));
                if let Err(e) = written {
                    write_err.get_or_insert(e);
                }
                rows.push(SweepRow {
                    alpha_or_w: value,
                    mean_active: Some(res.stats.mean_active_nodes),
                    std_active: Some(res.stats.std_active_nodes),
                    test_mse: Some(res.stats.test_mse),
                    test_total_loss: Some(res.stats.test_loss),
                });
                log(&format!(
                    "{system} {label}: active {:.2} ± {:.2}, test mse {:.3e}",
                    res.stats.mean_active_nodes, res.stats.std_active_nodes, res.stats.test_mse
                ));
            }
            Err(e) => {
                rows.push(SweepRow {
                    alpha_or_w: value,
                    mean_active: None,
                    std_active: None,
                    test_mse: None,
                    test_total_loss: None,
                });
                log(&format!("{system} {label}: failed: {e}"));
                error = Some(e.to_string());
            }
        }
        cells.push(SweepCellMeta { value, label, architecture: cell.architecture.clone(), error });
    };

    match mode {
        SweepMode::Alpha => {
            let (train_set, test_set) =
                prepare_datasets(&series, cfg.window_size, cfg.stride, cfg.train_fraction, coord)?;
            let arch = cfg.architecture(cfg.window_size);
            sweep_alpha(&train_set, &test_set, &arch, &cfg.train, &cfg.alpha_grid, &mut on_cell)?;
        }
        SweepMode::Window => {
            sweep_window(
                &series,
                cfg.train_fraction,
                cfg.stride,
                coord,
                &cfg.window_grid,
                |w| cfg.architecture(w),
                &cfg.train,
                &mut on_cell,
            )?;
        }
    }
    if let Some(e) = write_err {
        return Err(e);
    }

    let dir = layout.sweep_dir(mode, system);
    formats::write_sweep_csv(&dir.join("sweep.csv"), &rows)?;
    let ok = || rows.iter().filter(|r| r.mean_active.is_some());
    formats::write_dat(&dir.join("mean_active.dat"), ok().map(|r| (r.alpha_or_w, r.mean_active.unwrap())))?;
    formats::write_dat(&dir.join("std_active.dat"), ok().map(|r| (r.alpha_or_w, r.std_active.unwrap())))?;
    formats::write_dat(&dir.join("test_mse.dat"), ok().map(|r| (r.alpha_or_w, r.test_mse.unwrap())))?;
    formats::write_dat(&dir.join("test_loss.dat"), ok().map(|r| (r.alpha_or_w, r.test_total_loss.unwrap())))?;
    let meta = SweepMeta {
        system: cfg.system.clone(),
        mode,
        coordinate: coord,
        seed: cfg.train.seed,
        epochs: cfg.train.epochs,
        alpha: (mode == SweepMode::Window).then_some(cfg.train.alpha),
        window_size: (mode == SweepMode::Alpha).then_some(cfg.window_size),
        stride: cfg.stride,
        cells,
    };
    formats::write_json(&dir.join("sweep.meta.json"), &meta)?;
    Ok(meta)
}

// ---- LLE ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LleRecord {
    pub row: LleRow,
    pub estimate: LleEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LleMeta {
    pub sequence: String,
    pub grid: Option<SweepMode>,
    pub dt: f64,
    pub horizon_steps: usize,
    pub transient_steps: usize,
    pub seed: u64,
    pub displacement: f64,
    pub start_spread: f64,
    pub fit: chaosae_core::lyapunov::FitPolicy,
    pub reconstruction_stride: Option<String>,
    /// Per-curve slopes and fit windows of every row.
    pub records: Vec<LleRecord>,
}

/// Base name of the LLE outputs for a mode.
pub fn lle_stem(mode: LleMode, grid: SweepMode) -> String {
    match mode {
        LleMode::Input => "input".to_string(),
        LleMode::Reconstructed => format!("reconstructed_{}", grid.name()),
    }
}

fn dump_curve(path: &Path, pair: &(Vec<f64>, Vec<f64>), dt: f64) -> Result<()> {
    let curve = divergence_curve(&pair.0, &pair.1, dt)?;
    formats::write_dat(
        path,
        curve.log_distances.iter().enumerate().filter(|(_, v)| v.is_finite()).map(|(i, &v)| (i as f64 * dt, v)),
    )
}

/// Computes the LLE table rows for raw (`input`) or autoencoder-reconstructed
/// twin trajectories of every configured target.
///
/// Reconstructed mode reads the per-cell models of the `grid` sweep of each
/// target system; every coordinate is normalized with its own range over the
/// retained training trajectory.
pub fn run_lle(cfg: &ExperimentConfig, mode: LleMode, grid: SweepMode, log: Log) -> Result<Vec<LleRow>> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.output_dir);
    let params = cfg.lle.twin_params();
    let grid_values: Vec<f64> = match (mode, grid) {
        (LleMode::Input, _) => vec![],
        (LleMode::Reconstructed, SweepMode::Alpha) => {
            cfg.validate_alpha_grid()?;
            cfg.alpha_grid.clone()
        }
        (LleMode::Reconstructed, SweepMode::Window) => {
            cfg.validate_window_grid()?;
            cfg.window_grid.iter().map(|&w| w as f64).collect()
        }
    };
    // every model must be present before any work starts
    let mut models = Vec::new();
    if mode == LleMode::Reconstructed {
        for target in &cfg.lle.targets {
            let system = target.system.name();
            let mut per_system = Vec::new();
            for &value in &grid_values {
                let path = layout.cell_dir(grid, system, value).join("model.json");
                if !path.exists() {
                    return Err(HarnessError::Missing(format!(
                        "model for {system} cell {} ({})",
                        cell_label(grid, value),
                        path.display()
                    )));
                }
                per_system.push(formats::load_model(&path)?.0);
            }
            models.push(per_system);
        }
    }

    let stem = lle_stem(mode, grid);
    let curves_dir = layout.lle_dir().join("curves");
    let mut records = Vec::new();
    for (t, target) in cfg.lle.targets.iter().enumerate() {
        let spec = &target.system;
        let system = spec.name();
        let base = integration_for(cfg, spec);
        let lle_integ = IntegrationConfig { total_steps: base.transient_steps + cfg.lle.horizon_steps, ..base.clone() };
        let coords = target.coordinates.iter().map(|&c| cfg.index_of(c)).collect::<Result<Vec<_>>>()?;
        let norms = if mode == LleMode::Reconstructed {
            coordinate_columns(&layout, spec, &base, &coords)?
                .iter()
                .map(|s| Ok(NormParams::fit(s)?))
                .collect::<Result<Vec<_>>>()?
        } else {
            vec![]
        };
        for (k, &c) in coords.iter().enumerate() {
            let label = coordinate_label(spec, c);
            let pairs = twin_pairs(spec, c, &params, &lle_integ)?;
            let mut push = |cell: Option<f64>, pairs: &[(Vec<f64>, Vec<f64>)], curve_name: String| -> Result<()> {
                let est = lle_from_series_pairs(pairs, lle_integ.dt, params.fit)?;
                if cfg.lle.dump_curves {
                    dump_curve(&curves_dir.join(curve_name), &pairs[0], lle_integ.dt)?;
                }
                log(&format!(
                    "{system} {label} {}: λ = {:.3} ({:.3}), fit steps {}..{}",
                    cell.map_or_else(|| "input".to_string(), |v| v.to_string()),
                    est.mean_lambda,
                    est.std_lambda,
                    est.fit_start,
                    est.fit_end
                ));
                records.push(LleRecord {
                    row: LleRow {
                        system: system.to_string(),
                        sequence: if cell.is_some() { "reconstructed" } else { "input" }.to_string(),
                        alpha_or_w: cell,
                        coordinate: label.clone(),
                        lle_mean: est.mean_lambda,
                        lle_std: est.std_lambda,
                        fit_start: est.fit_start,
                        fit_end: est.fit_end,
                        num_curves: est.num_curves,
                    },
                    estimate: est,
                });
                Ok(())
            };
            match mode {
                LleMode::Input => push(None, &pairs, format!("input_{system}_{label}.dat"))?,
                LleMode::Reconstructed => {
                    for (model, &value) in models[t].iter().zip(&grid_values) {
                        let stride = cfg.reconstruction_stride(model.window());
                        let rec = pairs
                            .iter()
                            .map(|(a, b)| {
                                Ok((
                                    reconstruct_series_with_norm(model, a, &norms[k], stride)?,
                                    reconstruct_series_with_norm(model, b, &norms[k], stride)?,
                                ))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        let name = format!("reconstructed_{}_{system}_{label}.dat", cell_label(grid, value));
                        push(Some(value), &rec, name)?;
                    }
                }
            }
        }
    }

    // rows grouped by cell so the wide table follows the grid order
    let mut rows: Vec<LleRow> = records.iter().map(|r| r.row.clone()).collect();
    if mode == LleMode::Reconstructed {
        let pos = |v: Option<f64>| grid_values.iter().position(|g| Some(*g) == v);
        rows.sort_by_key(|r| pos(r.alpha_or_w));
    }
    let dir = layout.lle_dir();
    formats::write_lle_csv(&dir.join(format!("{stem}.csv")), &rows)?;
    formats::write_lle_table(&dir.join(format!("{stem}_table.csv")), &rows)?;
    let meta = LleMeta {
        sequence: stem.clone(),
        grid: (mode == LleMode::Reconstructed).then_some(grid),
        dt: cfg.integration.dt,
        horizon_steps: cfg.lle.horizon_steps,
        transient_steps: cfg.integration.transient_steps,
        seed: cfg.integration.seed,
        displacement: params.displacement,
        start_spread: params.start_spread,
        fit: params.fit,
        reconstruction_stride: (mode == LleMode::Reconstructed).then(|| match cfg.lle.reconstruction_stride {
            Some(s) => s.to_string(),
            None => "W".to_string(),
        }),
        records,
    };
    formats::write_json(&dir.join(format!("{stem}.meta.json")), &meta)?;
    Ok(rows)
}

/// Systems the report looks for, in table order.
pub fn known_systems() -> [SystemSpec; 3] {
    [SystemSpec::rossler(), SystemSpec::lorenz63(), SystemSpec::lorenz96()]
}

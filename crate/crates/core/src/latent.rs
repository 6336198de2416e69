//! Effective latent dimension: active-node counting and the α and W sweeps.

use alloc::format;
use alloc::vec::Vec;

use crate::datapipe::{prepare_datasets, WindowedDataset};
use crate::nn::{self, Architecture, AutoencoderModel, TrainConfig, TrainReport};
use crate::{stats, Error, Result};

/// Number of components with `|h_j| > alpha` (strict).
pub fn count_active(latent: &[f64], alpha: f64) -> usize {
    latent.iter().filter(|h| h.abs() > alpha).count()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LatentStats {
    pub mean_active_nodes: f64,
    pub std_active_nodes: f64,
    /// MSE plus the L1 term at `alpha`.
    pub test_loss: f64,
    pub test_mse: f64,
    pub alpha: f64,
    pub window_size: usize,
}

const CHUNK: usize = 4096;

/// Active-node count of every window in `test_set`, in order.
pub fn active_counts(model: &AutoencoderModel, test_set: &WindowedDataset, alpha: f64) -> Result<Vec<usize>> {
    if test_set.window_size != model.window() {
        return Err(Error::invalid(format!(
            "dataset uses W = {}, model expects {}",
            test_set.window_size,
            model.window()
        )));
    }
    let n = test_set.len();
    let mut counts = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        let pass = nn::forward(model, &test_set.windows.slice_rows(start, end))?;
        counts.extend(pass.latent().iter_rows().map(|h| count_active(h, alpha)));
        start = end;
    }
    Ok(counts)
}

/// Mean and spread of active latent nodes over `test_set`, plus its loss.
pub fn latent_stats(model: &AutoencoderModel, test_set: &WindowedDataset, alpha: f64) -> Result<LatentStats> {
    if !(alpha >= 0.0) {
        return Err(Error::invalid("alpha must be non-negative"));
    }
    let counts: Vec<f64> = active_counts(model, test_set, alpha)?.into_iter().map(|c| c as f64).collect();
    if counts.is_empty() {
        return Err(Error::invalid("test set is empty"));
    }
    let parts = nn::evaluate(model, &test_set.windows)?;
    Ok(LatentStats {
        mean_active_nodes: stats::mean(&counts),
        std_active_nodes: stats::std_dev(&counts),
        test_loss: parts.total(alpha),
        test_mse: parts.mse,
        alpha,
        window_size: test_set.window_size,
    })
}

/// Outcome of one sweep point.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub alpha: f64,
    pub window_size: usize,
    pub architecture: Architecture,
    pub outcome: Result<CellResult>,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub stats: LatentStats,
    pub model: AutoencoderModel,
    pub report: TrainReport,
}

fn run_cell(
    arch: &Architecture,
    train_set: &WindowedDataset,
    test_set: &WindowedDataset,
    cfg: &TrainConfig,
) -> Result<CellResult> {
    let model = AutoencoderModel::new(arch, train_set.norm, cfg.seed)?;
    let (model, report) = nn::train(model, train_set, test_set, cfg)?;
    let stats = latent_stats(&model, test_set, cfg.alpha)?;
    Ok(CellResult { stats, model, report })
}

/// Trains a fresh model per α (same seed and data) and measures each.
///
/// A failing cell is recorded and the sweep moves on.
pub fn sweep_alpha(
    train_set: &WindowedDataset,
    test_set: &WindowedDataset,
    arch: &Architecture,
    cfg: &TrainConfig,
    alphas: &[f64],
    mut on_cell: impl FnMut(usize, &SweepCell),
) -> Result<Vec<SweepCell>> {
    if alphas.is_empty() {
        return Err(Error::invalid("alpha grid is empty"));
    }
    let mut cells = Vec::with_capacity(alphas.len());
    for (i, &alpha) in alphas.iter().enumerate() {
        let cell_cfg = TrainConfig { alpha, ..cfg.clone() };
        let cell = SweepCell {
            alpha,
            window_size: train_set.window_size,
            architecture: arch.clone(),
            outcome: run_cell(arch, train_set, test_set, &cell_cfg),
        };
        on_cell(i, &cell);
        cells.push(cell);
    }
    Ok(cells)
}

/// Rebuilds the datasets and a width-scaled architecture for each `W`,
/// trains at fixed `cfg.alpha` and measures each.
#[allow(clippy::too_many_arguments)]
pub fn sweep_window(
    series: &[f64],
    train_fraction: f64,
    stride: usize,
    source_coordinate: usize,
    windows: &[usize],
    arch_for: impl Fn(usize) -> Architecture,
    cfg: &TrainConfig,
    mut on_cell: impl FnMut(usize, &SweepCell),
) -> Result<Vec<SweepCell>> {
    if windows.is_empty() {
        return Err(Error::invalid("window grid is empty"));
    }
    if let Some(w) = windows.iter().find(|&&w| w < 2) {
        return Err(Error::invalid(format!("window sizes must be at least 2, got {w}")));
    }
    let mut cells = Vec::with_capacity(windows.len());
    for (i, &w) in windows.iter().enumerate() {
        let arch = arch_for(w);
        let outcome = prepare_datasets(series, w, stride, train_fraction, source_coordinate)
            .and_then(|(tr, te)| run_cell(&arch, &tr, &te, cfg));
        let cell = SweepCell { alpha: cfg.alpha, window_size: w, architecture: arch, outcome };
        on_cell(i, &cell);
        cells.push(cell);
    }
    Ok(cells)
}

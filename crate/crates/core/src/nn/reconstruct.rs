use alloc::format;
use alloc::vec::Vec;

use super::model::{forward, AutoencoderModel};
use crate::datapipe::{apply_norm, stitch_at, window_count, NormParams};
use crate::{Error, Matrix, Result};

/// Passes a physical-units series through the autoencoder using the
/// normalization the model was trained with.
pub fn reconstruct_series(model: &AutoencoderModel, series: &[f64], stride: usize) -> Result<Vec<f64>> {
    reconstruct_series_with_norm(model, series, &model.norm, stride)
}

/// Normalize with `norm`, window at `stride`, run the model, stitch and
/// map back to physical units.
///
/// When `(len - W)` is not a multiple of `stride`, one extra window
/// anchored at the end covers the remainder, so the output always has the
/// input's length.
pub fn reconstruct_series_with_norm(
    model: &AutoencoderModel,
    series: &[f64],
    norm: &NormParams,
    stride: usize,
) -> Result<Vec<f64>> {
    norm.validate()?;
    let w = model.window();
    if series.len() < w {
        return Err(Error::invalid(format!("series of length {} shorter than window {w}", series.len())));
    }
    if stride == 0 || stride > w {
        return Err(Error::invalid(format!("stride must lie in 1..={w}, got {stride}")));
    }
    let normed = apply_norm(series, norm);
    let k = window_count(series.len(), w, stride);
    let mut starts: Vec<usize> = (0..k).map(|i| i * stride).collect();
    if starts[k - 1] + w < series.len() {
        starts.push(series.len() - w);
    }
    let mut data = Vec::with_capacity(starts.len() * w);
    for &s in &starts {
        data.extend_from_slice(&normed[s..s + w]);
    }
    let windows = Matrix::from_vec(starts.len(), w, data)?;
    let pass = forward(model, &windows)?;
    let stitched = stitch_at(pass.output(), &starts, series.len())?;
    Ok(stitched.into_iter().map(|y| norm.inverse(y)).collect())
}

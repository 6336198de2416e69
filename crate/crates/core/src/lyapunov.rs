//! Largest Lyapunov exponent from divergence curves.
//!
//! Two routes are provided. Twin trajectories integrate a pair of nearby
//! starting points and follow the per-coordinate distance. The
//! nearest-neighbour route (Rosenstein et al.) works on a single delay-embedded
//! series. Both fit the slope of `ln d(i)` against `t = i·dt` by least
//! squares.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::datapipe::{delay_embed, EmbeddingConfig, NormParams};
use crate::dynamics::{perturbed_initial_state, twin_trajectories, IntegrationConfig, SystemSpec};
use crate::nn::{reconstruct_series_with_norm, AutoencoderModel};
use crate::{math, stats, Error, Result};

/// `ln d(i)` for one pair; non-finite entries (zero distance) are unusable.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceCurve {
    pub log_distances: Vec<f64>,
    pub dt: f64,
    /// Distance at step 0.
    pub initial_separation: f64,
}

impl DivergenceCurve {
    /// Builds a curve from already computed `ln d(i)` values.
    pub fn from_log_distances(log_distances: Vec<f64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::invalid("dt must be positive"));
        }
        let initial_separation = log_distances.first().map_or(0.0, |&l| math::exp(l));
        Ok(DivergenceCurve { log_distances, dt, initial_separation })
    }

    pub fn len(&self) -> usize {
        self.log_distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_distances.is_empty()
    }

    pub fn usable(&self, i: usize) -> bool {
        self.log_distances[i].is_finite()
    }
}

/// Per-step log distance between two equally long series.
pub fn divergence_curve(a: &[f64], b: &[f64], dt: f64) -> Result<DivergenceCurve> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("series lengths differ: {} vs {}", a.len(), b.len())));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    let log_distances = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs();
            if d > 0.0 {
                math::ln(d)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let initial_separation = match (a.first(), b.first()) {
        (Some(x), Some(y)) => (x - y).abs(),
        _ => 0.0,
    };
    Ok(DivergenceCurve { log_distances, dt, initial_separation })
}

/// Least-squares slope of `ln d(i)` against `i·dt` over `[fit_start, fit_end)`,
/// skipping unusable points. Returns `(slope, intercept)`.
pub fn fit_line(curve: &DivergenceCurve, fit_start: usize, fit_end: usize) -> Result<(f64, f64)> {
    if fit_start >= fit_end || fit_end > curve.len() {
        return Err(Error::invalid(format!(
            "fit window [{fit_start}, {fit_end}) invalid for a curve of {} points",
            curve.len()
        )));
    }
    let (t, y): (Vec<f64>, Vec<f64>) = (fit_start..fit_end)
        .filter(|&i| curve.usable(i))
        .map(|i| (i as f64 * curve.dt, curve.log_distances[i]))
        .unzip();
    stats::linear_fit(&t, &y)
        .ok_or_else(|| Error::invalid(format!("fit window [{fit_start}, {fit_end}) has fewer than two usable points")))
}

/// Largest-Lyapunov-exponent estimate of one curve: the fitted slope.
pub fn fit_lambda(curve: &DivergenceCurve, fit_start: usize, fit_end: usize) -> Result<f64> {
    fit_line(curve, fit_start, fit_end).map(|(slope, _)| slope)
}

/// How the fit window of a divergence curve is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "policy", rename_all = "lowercase"))]
pub enum FitPolicy {
    /// From step 0 until `ln d` first rises above
    /// `ln d(0) + rise_fraction · (ln saturation − ln d(0))`.
    Auto { rise_fraction: f64 },
    /// Fixed `[start, end)` in steps.
    Manual { start: usize, end: usize },
}

impl Default for FitPolicy {
    fn default() -> Self {
        FitPolicy::Auto { rise_fraction: 0.6 }
    }
}

impl FitPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FitPolicy::Auto { rise_fraction } if !(rise_fraction > 0.0 && rise_fraction <= 1.0) => {
                Err(Error::invalid(format!("rise_fraction must lie in (0, 1], got {rise_fraction}")))
            }
            FitPolicy::Manual { start, end } if start >= end => {
                Err(Error::invalid(format!("manual fit window [{start}, {end}) is empty")))
            }
            _ => Ok(()),
        }
    }

    /// Resolves the window for `curve`, given the log of the saturation distance.
    pub fn window(&self, curve: &DivergenceCurve, log_saturation: f64) -> Result<(usize, usize)> {
        self.validate()?;
        let n = curve.len();
        match *self {
            FitPolicy::Manual { start, end } => {
                if end > n {
                    return Err(Error::invalid(format!("manual fit end {end} beyond curve length {n}")));
                }
                Ok((start, end))
            }
            FitPolicy::Auto { rise_fraction } => {
                let start = (0..n)
                    .find(|&i| curve.usable(i))
                    .ok_or_else(|| Error::invalid("divergence curve has no usable points"))?;
                let base = curve.log_distances[start];
                let threshold = base + rise_fraction * (log_saturation - base);
                let end = (start..n).find(|&i| curve.log_distances[i] > threshold).unwrap_or(n);
                Ok((start, end.max((start + 2).min(n))))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LleEstimate {
    /// Per time unit.
    pub mean_lambda: f64,
    /// Population standard deviation across curves.
    pub std_lambda: f64,
    /// Smallest fit start over all curves, in steps.
    pub fit_start: usize,
    /// Largest fit end over all curves, in steps.
    pub fit_end: usize,
    pub num_curves: usize,
    /// Slope of each curve.
    pub slopes: Vec<f64>,
    /// Fit window of each curve.
    pub windows: Vec<(usize, usize)>,
}

impl LleEstimate {
    fn from_fits(slopes: Vec<f64>, windows: Vec<(usize, usize)>) -> Result<Self> {
        if slopes.is_empty() {
            return Err(Error::invalid("no divergence curves to fit"));
        }
        Ok(LleEstimate {
            mean_lambda: stats::mean(&slopes),
            std_lambda: stats::std_dev(&slopes),
            fit_start: windows.iter().map(|w| w.0).min().unwrap_or(0),
            fit_end: windows.iter().map(|w| w.1).max().unwrap_or(0),
            num_curves: slopes.len(),
            slopes,
            windows,
        })
    }
}

fn log_range(series: &[f64]) -> f64 {
    let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    math::ln(hi - lo)
}

/// Fits one curve per `(a, b)` pair of same-coordinate series.
///
/// The saturation level for the automatic window is the range of `a`.
pub fn lle_from_series_pairs(pairs: &[(Vec<f64>, Vec<f64>)], dt: f64, fit: FitPolicy) -> Result<LleEstimate> {
    let mut slopes = Vec::with_capacity(pairs.len());
    let mut windows = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let curve = divergence_curve(a, b, dt)?;
        let (s, e) = fit.window(&curve, log_range(a))?;
        slopes.push(fit_lambda(&curve, s, e)?);
        windows.push((s, e));
    }
    LleEstimate::from_fits(slopes, windows)
}

/// Twin-trajectory experiment settings.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TwinParams {
    /// Number of independent pairs `M`.
    pub repeats: usize,
    pub displacement: f64,
    pub fit: FitPolicy,
    /// Half-width of the seeded offset applied to the initial state of each pair
    /// before the transient, so every pair forks from a different attractor point.
    pub start_spread: f64,
}

impl Default for TwinParams {
    fn default() -> Self {
        TwinParams { repeats: 10, displacement: 1e-7, fit: FitPolicy::default(), start_spread: 1.0 }
    }
}

impl TwinParams {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::invalid("need at least one twin pair"));
        }
        if !(self.displacement > 0.0) || !self.displacement.is_finite() {
            return Err(Error::invalid("displacement must be positive"));
        }
        self.fit.validate()
    }
}

/// Coordinate series of `repeats` twin pairs; pair `j` uses seed `cfg.seed + j`.
pub fn twin_pairs(
    spec: &SystemSpec,
    coordinate: usize,
    params: &TwinParams,
    cfg: &IntegrationConfig,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    params.validate()?;
    cfg.validate(spec)?;
    let base = cfg.initial_state_for(spec);
    (0..params.repeats)
        .map(|j| {
            let start = perturbed_initial_state(spec, &base, params.start_spread, cfg.seed.wrapping_add(j as u64));
            let pair_cfg = IntegrationConfig { initial_state: Some(start), ..cfg.clone() };
            let (a, b) = twin_trajectories(spec, &pair_cfg, params.displacement, coordinate)?;
            Ok((a.coordinate(coordinate)?, b.coordinate(coordinate)?))
        })
        .collect()
}

/// Largest Lyapunov exponent of `spec` from `repeats` twin pairs on one coordinate.
///
/// Each pair is integrated for `cfg.total_steps - cfg.transient_steps` rows after the fork.
pub fn lle_estimate(
    spec: &SystemSpec,
    coordinate: usize,
    params: &TwinParams,
    cfg: &IntegrationConfig,
) -> Result<LleEstimate> {
    let pairs = twin_pairs(spec, coordinate, params, cfg)?;
    lle_from_series_pairs(&pairs, cfg.dt, params.fit)
}

/// How a coordinate series is fed through the autoencoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionSetup {
    pub stride: usize,
    /// Range used to normalize the series; `None` uses the model's own.
    pub norm: Option<NormParams>,
}

/// As [`lle_estimate`], with both series of every pair reconstructed by
/// `model` before the divergence analysis.
pub fn lle_of_reconstructed(
    model: &AutoencoderModel,
    spec: &SystemSpec,
    coordinate: usize,
    params: &TwinParams,
    cfg: &IntegrationConfig,
    setup: ReconstructionSetup,
) -> Result<LleEstimate> {
    let norm = setup.norm.unwrap_or(model.norm);
    let pairs = twin_pairs(spec, coordinate, params, cfg)?
        .into_iter()
        .map(|(a, b)| {
            Ok((
                reconstruct_series_with_norm(model, &a, &norm, setup.stride)?,
                reconstruct_series_with_norm(model, &b, &norm, setup.stride)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    lle_from_series_pairs(&pairs, cfg.dt, params.fit)
}

/// Settings of the nearest-neighbour estimator.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NeighborParams {
    pub embedding: EmbeddingConfig,
    /// Neighbours must be more than this many steps apart in time.
    pub theiler_window: usize,
    /// Steps each pair is followed.
    pub horizon: usize,
    pub fit: FitPolicy,
    /// Reference points are split into this many contiguous blocks; the
    /// spread of the block slopes gives the reported deviation.
    pub segments: usize,
}

/// Mean `ln d_j(i)` over pairs `(j, nn(j))`, for `i` in `0..horizon`.
fn mean_log_divergence(points: &crate::Matrix, pairs: &[(usize, usize)], horizon: usize) -> Vec<f64> {
    let mut sum = vec![0.0; horizon];
    let mut count = vec![0usize; horizon];
    for &(j, k) in pairs {
        for i in 0..horizon {
            let d2: f64 = points.row(j + i).iter().zip(points.row(k + i)).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 > 0.0 {
                sum[i] += 0.5 * math::ln(d2);
                count[i] += 1;
            }
        }
    }
    sum.iter().zip(&count).map(|(&s, &c)| if c > 0 { s / c as f64 } else { f64::NEG_INFINITY }).collect()
}

/// Nearest-neighbour (Rosenstein) estimate from a single scalar series.
///
/// Only reference points and neighbours that can be followed for the whole
/// horizon are used, so every step of the mean curve averages the same pairs.
pub fn rosenstein_nn_estimate(series: &[f64], dt: f64, params: &NeighborParams) -> Result<LleEstimate> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    if params.horizon < 2 || params.segments == 0 {
        return Err(Error::invalid("horizon must be at least 2 and segments at least 1"));
    }
    params.fit.validate()?;
    let points = delay_embed(series, params.embedding)?;
    let m = points.rows();
    if m <= params.horizon {
        return Err(Error::invalid(format!("{m} embedded points cannot be followed for {} steps", params.horizon)));
    }
    let usable = m - params.horizon;

    let mut pairs = Vec::new();
    for j in 0..usable {
        let mut best = f64::INFINITY;
        let mut best_k = None;
        for k in 0..usable {
            if j.abs_diff(k) <= params.theiler_window {
                continue;
            }
            let d2: f64 = points.row(j).iter().zip(points.row(k)).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 > 0.0 && d2 < best {
                best = d2;
                best_k = Some(k);
            }
        }
        if let Some(k) = best_k {
            pairs.push((j, k));
        }
    }
    if pairs.is_empty() {
        return Err(Error::invalid("no neighbour pairs outside the Theiler window"));
    }

    let curve = DivergenceCurve::from_log_distances(mean_log_divergence(&points, &pairs, params.horizon), dt)?;
    let saturation = curve.log_distances.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let (start, end) = params.fit.window(&curve, saturation)?;
    let overall = fit_lambda(&curve, start, end)?;

    let segments = params.segments.min(pairs.len());
    let per = pairs.len() / segments;
    let mut slopes = Vec::with_capacity(segments);
    for s in 0..segments {
        let hi = if s + 1 == segments { pairs.len() } else { (s + 1) * per };
        let seg =
            DivergenceCurve::from_log_distances(mean_log_divergence(&points, &pairs[s * per..hi], params.horizon), dt)?;
        slopes.push(fit_lambda(&seg, start, end)?);
    }

    Ok(LleEstimate {
        mean_lambda: overall,
        std_lambda: stats::std_dev(&slopes),
        fit_start: start,
        fit_end: end,
        num_curves: slopes.len(),
        windows: vec![(start, end); slopes.len()],
        slopes,
    })
}

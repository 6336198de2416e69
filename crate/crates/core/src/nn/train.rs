use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::AdamState;
use super::backward::backward;
use super::loss::{loss_parts, LossParts};
use super::model::{forward, AutoencoderModel};
use crate::datapipe::WindowedDataset;
use crate::{Error, Matrix, Result};

/// Rows evaluated per forward call outside training.
const EVAL_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// L1 activity strength on the latent output.
    pub alpha: f64,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 7500,
            batch_size: 32,
            learning_rate: 1e-3,
            alpha: 1e-5,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::invalid("alpha must be non-negative"));
        }
        let in_unit = |b: f64| (0.0..1.0).contains(&b);
        if !in_unit(self.adam_beta1) || !in_unit(self.adam_beta2) || !(self.adam_epsilon >= 0.0) {
            return Err(Error::invalid("Adam betas must lie in [0, 1) and epsilon be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Sample-weighted mean of the minibatch losses (MSE + L1 term).
    pub train_loss: f64,
    pub test_loss: f64,
    pub test_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    /// Test loss including the L1 term.
    pub test_loss: Vec<f64>,
    pub test_mse: Vec<f64>,
    pub final_test_mse: f64,
}

/// Loss terms of `model` over a whole dataset.
pub fn evaluate(model: &AutoencoderModel, data: &Matrix) -> Result<LossParts> {
    let n = data.rows();
    if n == 0 {
        return Ok(LossParts::default());
    }
    let mut total = LossParts::default();
    let mut start = 0;
    while start < n {
        let end = (start + EVAL_CHUNK).min(n);
        let chunk = data.slice_rows(start, end);
        let pass = forward(model, &chunk)?;
        let p = loss_parts(&chunk, pass.output(), pass.latent());
        let w = (end - start) as f64;
        total.mse += p.mse * w;
        total.l1 += p.l1 * w;
        start = end;
    }
    total.mse /= n as f64;
    total.l1 /= n as f64;
    Ok(total)
}

fn check_datasets(model: &AutoencoderModel, train: &WindowedDataset, test: &WindowedDataset) -> Result<()> {
    if train.window_size != test.window_size || train.norm != test.norm {
        return Err(Error::invalid("train and test sets must share window size and normalization"));
    }
    if train.window_size != model.window() {
        return Err(Error::invalid(format!(
            "datasets use W = {}, model expects {}",
            train.window_size,
            model.window()
        )));
    }
    if train.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    Ok(())
}

pub fn train(
    model: AutoencoderModel,
    train_set: &WindowedDataset,
    test_set: &WindowedDataset,
    cfg: &TrainConfig,
) -> Result<(AutoencoderModel, TrainReport)> {
    train_with_progress(model, train_set, test_set, cfg, |_| {})
}

/// Minibatch Adam training; `progress` sees every finished epoch.
///
/// Windows are reshuffled each epoch from a generator seeded with
/// `cfg.seed`; the final partial batch is kept.
pub fn train_with_progress(
    mut model: AutoencoderModel,
    train_set: &WindowedDataset,
    test_set: &WindowedDataset,
    cfg: &TrainConfig,
    mut progress: impl FnMut(&EpochRecord),
) -> Result<(AutoencoderModel, TrainReport)> {
    cfg.validate()?;
    check_datasets(&model, train_set, test_set)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(&model);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut report = TrainReport::default();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let batch = train_set.windows.select_rows(idx);
            let pass = forward(&model, &batch)?;
            let l = loss_parts(&batch, pass.output(), pass.latent()).total(cfg.alpha);
            if !l.is_finite() {
                return Err(Error::TrainingDiverged { epoch, loss: l });
            }
            weighted += l * idx.len() as f64;
            let grads = backward(&model, &pass, cfg.alpha);
            adam.step(&mut model, &grads, cfg);
        }
        let train_loss = weighted / train_set.len() as f64;
        let test = evaluate(&model, &test_set.windows)?;
        let rec = EpochRecord { epoch, train_loss, test_loss: test.total(cfg.alpha), test_mse: test.mse };
        if !rec.test_loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch, loss: rec.test_loss });
        }
        report.train_loss.push(rec.train_loss);
        report.test_loss.push(rec.test_loss);
        report.test_mse.push(rec.test_mse);
        progress(&rec);
    }

    report.final_test_mse = match report.test_mse.last() {
        Some(&m) => m,
        None => evaluate(&model, &test_set.windows)?.mse,
    };
    Ok((model, report))
}

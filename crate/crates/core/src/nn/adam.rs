use alloc::vec;
use alloc::vec::Vec;

use super::backward::Gradients;
use super::model::AutoencoderModel;
use super::train::TrainConfig;
use crate::math;

/// One Adam update on a flat parameter slice.
///
/// `t` is the 1-based step index used for bias correction.
pub fn adam_update(params: &mut [f64], grads: &[f64], m: &mut [f64], v: &mut [f64], cfg: &TrainConfig, t: u64) {
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let bc1 = 1.0 - libm::pow(b1, t as f64);
    let bc2 = 1.0 - libm::pow(b2, t as f64);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= cfg.learning_rate * m_hat / (math::sqrt(v_hat) + cfg.adam_epsilon);
    }
}

/// First and second moment estimates for every model parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m_w: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(model: &AutoencoderModel) -> Self {
        let w: Vec<Vec<f64>> = model.layers().iter().map(|l| vec![0.0; l.weights.as_slice().len()]).collect();
        let b: Vec<Vec<f64>> = model.layers().iter().map(|l| vec![0.0; l.bias.len()]).collect();
        AdamState { m_w: w.clone(), v_w: w, m_b: b.clone(), v_b: b, step: 0 }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update to every layer and advances the step counter.
    pub fn step(&mut self, model: &mut AutoencoderModel, grads: &Gradients, cfg: &TrainConfig) {
        self.step += 1;
        let t = self.step;
        for (l, layer) in model.layers_mut().iter_mut().enumerate() {
            adam_update(
                layer.weights.as_mut_slice(),
                grads.weights[l].as_slice(),
                &mut self.m_w[l],
                &mut self.v_w[l],
                cfg,
                t,
            );
            adam_update(&mut layer.bias, &grads.biases[l], &mut self.m_b[l], &mut self.v_b[l], cfg, t);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = TrainConfig::default();
        for g in [3.0, -0.002, 1e-3, -250.0] {
            let mut p = [1.0];
            let (mut m, mut v) = ([0.0], [0.0]);
            adam_update(&mut p, &[g], &mut m, &mut v, &cfg, 1);
            let expected = 1.0 - cfg.learning_rate * g / (g.abs() + cfg.adam_epsilon);
            assert!((p[0] - expected).abs() < 1e-15);
            // |g| / (|g| + eps) differs from 1 by about eps / |g|
            let tol = cfg.learning_rate * (cfg.adam_epsilon / g.abs()) * 1.01;
            assert!((p[0] - (1.0 - cfg.learning_rate * g.signum())).abs() <= tol);
        }
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let cfg = TrainConfig::default();
        let mut p = [0.25, -4.0];
        let (mut m, mut v) = ([0.0; 2], [0.0; 2]);
        for t in 1..5 {
            adam_update(&mut p, &[0.0, 0.0], &mut m, &mut v, &cfg, t);
        }
        assert_eq!(p, [0.25, -4.0]);
    }
}

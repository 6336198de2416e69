use alloc::vec;
use alloc::vec::Vec;

use super::model::{AutoencoderModel, ForwardPass};
use crate::Matrix;

/// Per-layer gradients of the batch-mean loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

/// Backpropagates `mean_batch[MSE + alpha · Σ|h|]` through `model`.
///
/// The L1 term enters at the latent layer output as `alpha · sign(h)` with
/// `sign(0) = 0`.
pub fn backward(model: &AutoencoderModel, pass: &ForwardPass, alpha: f64) -> Gradients {
    let layers = model.layers();
    let x = pass.input();
    let out = pass.output();
    let b = x.rows().max(1) as f64;
    let scale = 2.0 / (x.cols() as f64 * b);

    let mut grad_a = Matrix::zeros(out.rows(), out.cols());
    for ((g, &o), &t) in grad_a.as_mut_slice().iter_mut().zip(out.as_slice()).zip(x.as_slice()) {
        *g = scale * (o - t);
    }

    let mut weights = vec![Matrix::zeros(0, 0); layers.len()];
    let mut biases = vec![Vec::new(); layers.len()];

    for l in (0..layers.len()).rev() {
        let layer = &layers[l];
        let a_out = &pass.activations[l + 1];
        let z = &pass.pre_activations[l];
        let a_in = &pass.activations[l];

        if l == model.latent_layer_index() && alpha != 0.0 {
            let c = alpha / b;
            for (g, &h) in grad_a.as_mut_slice().iter_mut().zip(a_out.as_slice()) {
                if h > 0.0 {
                    *g += c;
                } else if h < 0.0 {
                    *g -= c;
                }
            }
        }

        // delta = dL/dz
        let act = layer.spec.activation;
        let mut delta = grad_a;
        for ((d, &zv), &av) in delta.as_mut_slice().iter_mut().zip(z.as_slice()).zip(a_out.as_slice()) {
            *d *= act.derivative(zv, av);
        }

        let mut gw = Matrix::zeros(layer.spec.input_size, layer.spec.output_size);
        let mut gb = vec![0.0; layer.spec.output_size];
        for r in 0..delta.rows() {
            let dr = delta.row(r);
            for (g, &d) in gb.iter_mut().zip(dr) {
                *g += d;
            }
            for (k, &av) in a_in.row(r).iter().enumerate() {
                if av == 0.0 {
                    continue;
                }
                for (g, &d) in gw.row_mut(k).iter_mut().zip(dr) {
                    *g += av * d;
                }
            }
        }

        if l > 0 {
            let mut prev = Matrix::zeros(delta.rows(), layer.spec.input_size);
            for r in 0..delta.rows() {
                let dr = delta.row(r);
                let pr = prev.row_mut(r);
                for (k, p) in pr.iter_mut().enumerate() {
                    *p = dr.iter().zip(layer.weights.row(k)).map(|(d, w)| d * w).sum();
                }
            }
            grad_a = prev;
        } else {
            grad_a = Matrix::zeros(0, 0);
        }

        weights[l] = gw;
        biases[l] = gb;
    }

    Gradients { weights, biases }
}

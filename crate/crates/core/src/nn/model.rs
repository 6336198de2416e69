use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::init::init_xavier;
use crate::datapipe::NormParams;
use crate::{math, Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    Sigmoid,
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + math::exp(-z)),
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    /// The relu subgradient at zero is zero.
    #[inline]
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerSpec {
    pub input_size: usize,
    pub output_size: usize,
    pub activation: Activation,
}

/// Fully connected layer computing `activation(x · weights + bias)`.
///
/// `weights` is `input_size × output_size`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn param_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }
}

/// Layer sizes of a mirrored autoencoder.
///
/// Encoder `window → hidden[0] → … → latent`, decoder the same sizes and
/// activations reversed, then a final layer back to `window`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Architecture {
    pub window: usize,
    pub hidden: Vec<(usize, Activation)>,
    pub latent: usize,
    pub latent_activation: Activation,
    pub output_activation: Activation,
}

impl Architecture {
    /// `30 → 22 (sigmoid) → 15 (relu) → 10 (relu)` mirrored, linear output,
    /// with hidden widths scaled by `window / 30` and rounded.
    pub fn scaled(window: usize) -> Self {
        let scale = |base: f64| (math::round(base * window as f64 / 30.0) as usize).max(1);
        Architecture {
            window,
            hidden: vec![(scale(22.0), Activation::Sigmoid), (scale(15.0), Activation::Relu)],
            latent: 10,
            latent_activation: Activation::Relu,
            output_activation: Activation::Linear,
        }
    }

    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        let mut sizes = vec![self.window];
        let mut acts = Vec::new();
        for &(h, a) in &self.hidden {
            sizes.push(h);
            acts.push(a);
        }
        sizes.push(self.latent);
        acts.push(self.latent_activation);
        for &(h, a) in self.hidden.iter().rev() {
            sizes.push(h);
            acts.push(a);
        }
        sizes.push(self.window);
        acts.push(self.output_activation);
        sizes
            .windows(2)
            .zip(acts)
            .map(|(s, activation)| LayerSpec { input_size: s[0], output_size: s[1], activation })
            .collect()
    }

    /// Index of the layer whose output is the latent code.
    pub fn latent_layer_index(&self) -> usize {
        self.hidden.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    layers: Vec<Layer>,
    latent_layer_index: usize,
    pub norm: NormParams,
}

impl AutoencoderModel {
    /// Xavier-uniform weights and zero biases drawn from `seed`.
    pub fn new(arch: &Architecture, norm: NormParams, seed: u64) -> Result<Self> {
        let specs = arch.layer_specs();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = specs
            .into_iter()
            .map(|spec| Layer {
                weights: init_xavier(spec.input_size, spec.output_size, &mut rng),
                bias: vec![0.0; spec.output_size],
                spec,
            })
            .collect();
        AutoencoderModel::from_layers(layers, arch.latent_layer_index(), norm)
    }

    pub fn from_layers(layers: Vec<Layer>, latent_layer_index: usize, norm: NormParams) -> Result<Self> {
        norm.validate()?;
        if layers.is_empty() {
            return Err(Error::invalid("model has no layers"));
        }
        if latent_layer_index >= layers.len() {
            return Err(Error::invalid("latent layer index out of range"));
        }
        for (i, l) in layers.iter().enumerate() {
            let s = l.spec;
            if s.input_size == 0 || s.output_size == 0 {
                return Err(Error::invalid(format!("layer {i} has a zero size")));
            }
            if l.weights.rows() != s.input_size || l.weights.cols() != s.output_size || l.bias.len() != s.output_size {
                return Err(Error::invalid(format!("layer {i} parameters do not match its spec")));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].spec.output_size != pair[1].spec.input_size {
                return Err(Error::invalid(format!("layer {i} output does not feed layer {}", i + 1)));
            }
        }
        if layers[0].spec.input_size != layers[layers.len() - 1].spec.output_size {
            return Err(Error::invalid("first input size must equal last output size"));
        }
        Ok(AutoencoderModel { layers, latent_layer_index, norm })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn latent_layer_index(&self) -> usize {
        self.latent_layer_index
    }

    pub fn window(&self) -> usize {
        self.layers[0].spec.input_size
    }

    pub fn latent_width(&self) -> usize {
        self.layers[self.latent_layer_index].spec.output_size
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }
}

/// Everything backpropagation needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// `activations[0]` is the input batch, `activations[k + 1]` the output of layer `k`.
    pub activations: Vec<Matrix>,
    /// Pre-activations `x · W + b` of each layer.
    pub pre_activations: Vec<Matrix>,
    latent_layer_index: usize,
}

impl ForwardPass {
    pub fn latent(&self) -> &Matrix {
        &self.activations[self.latent_layer_index + 1]
    }

    pub fn output(&self) -> &Matrix {
        self.activations.last().expect("at least the input")
    }

    pub fn input(&self) -> &Matrix {
        &self.activations[0]
    }
}

fn affine(x: &Matrix, w: &Matrix, b: &[f64]) -> Matrix {
    let mut z = Matrix::zeros(x.rows(), w.cols());
    for r in 0..x.rows() {
        let out = z.row_mut(r);
        out.copy_from_slice(b);
        for (k, &xv) in x.row(r).iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            for (o, &wv) in out.iter_mut().zip(w.row(k)) {
                *o += xv * wv;
            }
        }
    }
    z
}

pub fn forward(model: &AutoencoderModel, batch: &Matrix) -> Result<ForwardPass> {
    if batch.cols() != model.window() {
        return Err(Error::invalid(format!("batch has {} columns, model expects {}", batch.cols(), model.window())));
    }
    let n = model.layers.len();
    let mut activations = Vec::with_capacity(n + 1);
    let mut pre_activations = Vec::with_capacity(n);
    activations.push(batch.clone());
    for layer in &model.layers {
        let z = affine(activations.last().unwrap(), &layer.weights, &layer.bias);
        let mut a = z.clone();
        let act = layer.spec.activation;
        if act != Activation::Linear {
            a.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
        }
        pre_activations.push(z);
        activations.push(a);
    }
    Ok(ForwardPass { activations, pre_activations, latent_layer_index: model.latent_layer_index })
}

use chaosae_core::datapipe::NormParams;
use chaosae_core::nn::{backward, forward, loss, Activation, Architecture, AutoencoderModel};
use chaosae_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-6;

fn batch_loss(model: &AutoencoderModel, x: &Matrix, alpha: f64) -> f64 {
    let p = forward(model, x).unwrap();
    loss(x, p.output(), p.latent(), alpha)
}

fn near_relu_kink(model: &AutoencoderModel, x: &Matrix) -> bool {
    let p = forward(model, x).unwrap();
    model
        .layers()
        .iter()
        .zip(&p.pre_activations)
        .any(|(l, z)| l.spec.activation == Activation::Relu && z.as_slice().iter().any(|v| v.abs() < 1e-8))
}

/// Central differences on every parameter; returns the worst relative error
/// beyond the absolute round-off allowance.
fn check(model: &mut AutoencoderModel, x: &Matrix, alpha: f64) -> f64 {
    let grads = backward(model, &forward(model, x).unwrap(), alpha);
    let mut worst: f64 = 0.0;
    for l in 0..model.layers().len() {
        for i in 0..model.layers()[l].weights.as_slice().len() + model.layers()[l].bias.len() {
            let n_w = model.layers()[l].weights.as_slice().len();
            let analytic = if i < n_w { grads.weights[l].as_slice()[i] } else { grads.biases[l][i - n_w] };
            let param = |m: &mut AutoencoderModel| -> *mut f64 {
                let layer = &mut m.layers_mut()[l];
                if i < n_w {
                    &mut layer.weights.as_mut_slice()[i]
                } else {
                    &mut layer.bias[i - n_w]
                }
            };
            let p = param(model);
            let orig = unsafe { *p };
            unsafe { *p = orig + H };
            let up = batch_loss(model, x, alpha);
            unsafe { *p = orig - H };
            let down = batch_loss(model, x, alpha);
            unsafe { *p = orig };
            let numeric = (up - down) / (2.0 * H);
            // rtol 1e-5 plus an atol of 1e-9 for vanishing components: at h = 1e-6
            // the round-off in (up - down) / 2h is about 1e-10
            let excess = (analytic - numeric).abs() - 1e-9;
            worst = worst.max(excess.max(0.0) / analytic.abs().max(numeric.abs()).max(f64::MIN_POSITIVE));
        }
    }
    worst
}

fn random_model(rng: &mut ChaCha8Rng) -> AutoencoderModel {
    let acts = [Activation::Sigmoid, Activation::Relu, Activation::Linear];
    let window = rng.gen_range(4..=7);
    let h1 = rng.gen_range(3..=5);
    let latent = rng.gen_range(2..=3);
    let arch = Architecture {
        window,
        hidden: vec![(h1, acts[rng.gen_range(0..3)])],
        latent,
        latent_activation: if rng.gen_bool(0.5) { Activation::Relu } else { Activation::Sigmoid },
        output_activation: acts[rng.gen_range(0..3)],
    };
    let mut m = AutoencoderModel::new(&arch, NormParams::new(0.0, 1.0).unwrap(), rng.gen()).unwrap();
    for layer in m.layers_mut() {
        for b in &mut layer.bias {
            *b = rng.gen_range(-0.3..0.3);
        }
    }
    m
}

#[test]
fn analytic_gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 25 {
        let mut model = random_model(&mut rng);
        assert!(model.param_count() <= 200);
        let w = model.window();
        let x = Matrix::from_vec(5, w, (0..5 * w).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        if near_relu_kink(&model, &x) {
            continue;
        }
        let alpha = [0.0, 1e-3, 0.05][checked % 3];
        let err = check(&mut model, &x, alpha);
        assert!(err < 1e-5, "model {checked}: worst relative error {err}");
        checked += 1;
    }
}

#[test]
fn toy_six_four_two_model() {
    let arch = Architecture {
        window: 6,
        hidden: vec![(4, Activation::Sigmoid)],
        latent: 2,
        latent_activation: Activation::Relu,
        output_activation: Activation::Linear,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut model = AutoencoderModel::new(&arch, NormParams::new(0.0, 1.0).unwrap(), 11).unwrap();
    let x = Matrix::from_vec(8, 6, (0..48).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
    assert!(!near_relu_kink(&model, &x));
    let err = check(&mut model, &x, 1e-2);
    assert!(err < 1e-5, "worst relative error {err}");
}

#[test]
fn zero_alpha_is_pure_mse() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let model = random_model(&mut rng);
    let w = model.window();
    let x = Matrix::from_vec(3, w, (0..3 * w).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
    let p = forward(&model, &x).unwrap();
    let mse: f64 =
        x.as_slice().iter().zip(p.output().as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (3 * w) as f64;
    assert_eq!(loss(&x, p.output(), p.latent(), 0.0), mse);
    let g0 = backward(&model, &p, 0.0);
    let g1 = backward(&model, &p, 0.0);
    assert_eq!(g0, g1);
}

#[test]
fn dead_relu_network_has_zero_gradients() {
    let arch = Architecture {
        window: 6,
        hidden: vec![(4, Activation::Relu)],
        latent: 2,
        latent_activation: Activation::Relu,
        output_activation: Activation::Relu,
    };
    let model = AutoencoderModel::new(&arch, NormParams::new(0.0, 1.0).unwrap(), 1).unwrap();
    let x = Matrix::zeros(4, 6);
    let g = backward(&model, &forward(&model, &x).unwrap(), 1e-3);
    assert!(g.weights.iter().all(|m| m.as_slice().iter().all(|&v| v == 0.0)));
    assert!(g.biases.iter().all(|b| b.iter().all(|&v| v == 0.0)));
}

/// Scalar loop-by-loop forward pass.
#[allow(clippy::needless_range_loop)]
fn naive_forward(model: &AutoencoderModel, x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    for layer in model.layers() {
        let mut next = vec![0.0; layer.spec.output_size];
        for j in 0..layer.spec.output_size {
            let mut z = layer.bias[j];
            for k in 0..layer.spec.input_size {
                z += a[k] * layer.weights.get(k, j);
            }
            next[j] = match layer.spec.activation {
                Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
                Activation::Relu => z.max(0.0),
                Activation::Linear => z,
            };
        }
        a = next;
    }
    a
}

#[test]
fn forward_matches_naive_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let model = AutoencoderModel::new(&Architecture::scaled(30), NormParams::new(0.0, 1.0).unwrap(), 3).unwrap();
    let x = Matrix::from_vec(16, 30, (0..480).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
    let p = forward(&model, &x).unwrap();
    for r in 0..16 {
        let want = naive_forward(&model, x.row(r));
        for (a, b) in p.output().row(r).iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

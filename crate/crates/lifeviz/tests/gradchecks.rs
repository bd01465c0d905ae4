//! Finite-difference gradient checks in 64-bit mode for every
//! differentiable operation and for the full two-timestep network.

use lifeviz::gradcheck::{max_relative_error, DEFAULT_H};
use lifeviz::model::{init_params, ModelConfig};
use lifeviz::tensor::ops;
use lifeviz::tensor::optim::Parameter;
use lifeviz::tensor::Tensor;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-6;

/// Values bounded away from zero so a ±h bump cannot cross a relu kink.
fn kink_free(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let mag = rng.gen_range(0.1..1.0);
            if rng.gen_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

fn param(rng: &mut ChaCha8Rng, name: &str, shape: &[usize]) -> Parameter<f64> {
    let n = shape.iter().product();
    Parameter::new(
        name.to_string(),
        Tensor::param_from_vec(shape, kink_free(rng, n)).unwrap(),
    )
}

#[test]
fn conv2d_circular_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = param(&mut rng, "x", &[2, 3, 5, 4]);
    let k = param(&mut rng, "k", &[2, 3, 3, 3]);
    let b = param(&mut rng, "b", &[2]);
    let params = [x.clone(), k.clone(), b.clone()];
    let err = max_relative_error(
        &params,
        || {
            let y = ops::conv2d_circular(&x.value, &k.value, &b.value)?;
            ops::mse_loss(&y, &Tensor::zeros(y.shape()))
        },
        DEFAULT_H,
    )
    .unwrap();
    assert!(err < TOL, "conv2d_circular: {err}");
}

#[test]
fn activation_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = param(&mut rng, "x", &[2, 2, 3, 3]);
    let params = [x.clone()];
    for (name, f) in [
        ("relu", ops::relu as fn(&Tensor<f64>) -> lifeviz::Result<Tensor<f64>>),
        ("sigmoid", ops::sigmoid),
    ] {
        let err = max_relative_error(
            &params,
            || {
                let y = f(&x.value)?;
                ops::mse_loss(&y, &Tensor::zeros(y.shape()))
            },
            DEFAULT_H,
        )
        .unwrap();
        assert!(err < TOL, "{name}: {err}");
    }
}

#[test]
fn loss_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pred = param(&mut rng, "pred", &[1, 1, 4, 4]);
    let target = param(&mut rng, "target", &[1, 1, 4, 4]);
    let params = [pred.clone(), target.clone()];
    let err = max_relative_error(
        &params,
        || ops::mse_loss(&pred.value, &target.value),
        DEFAULT_H,
    )
    .unwrap();
    assert!(err < TOL, "mse_loss: {err}");

    // BCE on sigmoid outputs; labels constant in (0,1) keep logs finite.
    let logits = param(&mut rng, "logits", &[6]);
    let labels = Tensor::from_vec(&[6], vec![0.3, 0.8, 0.1, 0.9, 0.5, 0.6]).unwrap();
    let params = [logits.clone()];
    let err = max_relative_error(
        &params,
        || ops::bce_loss(&ops::sigmoid(&logits.value)?, &labels),
        DEFAULT_H,
    )
    .unwrap();
    assert!(err < TOL, "bce_loss: {err}");
}

#[test]
fn dense_pool_and_arithmetic_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = param(&mut rng, "x", &[2, 3, 4, 4]);
    let w = param(&mut rng, "w", &[1, 3]);
    let b = param(&mut rng, "b", &[1]);
    let y = param(&mut rng, "y", &[2, 3, 4, 4]);
    let params = [x.clone(), w.clone(), b.clone(), y.clone()];
    let err = max_relative_error(
        &params,
        || {
            let sum = ops::add(&x.value, &ops::scale(&y.value, 0.7)?)?;
            let pooled = ops::global_mean_pool(&sum)?;
            let out = ops::dense(&pooled, &w.value, &b.value)?;
            ops::mean_all(&out)
        },
        DEFAULT_H,
    )
    .unwrap();
    assert!(err < TOL, "dense/pool/add/scale/mean_all: {err}");
}

#[test]
fn full_two_timestep_network_gradients() {
    // The complete g=t=2 training loss (final prediction averaged with the
    // autoencoder term) through encoder, shared block, and decoder.
    let cfg = ModelConfig {
        grid_height: 5,
        grid_width: 5,
        channels: 4,
        model_timesteps: 2,
        ..ModelConfig::default()
    };
    let params = init_params::<f64>(&cfg, 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let x = Tensor::from_vec(
        &[2, 1, 5, 5],
        (0..50).map(|_| f64::from(rng.gen_bool(0.4))).collect(),
    )
    .unwrap();
    let y = Tensor::from_vec(
        &[2, 1, 5, 5],
        (0..50).map(|_| f64::from(rng.gen_bool(0.4))).collect(),
    )
    .unwrap();
    let backbone = params.backbone_parameters();
    let err = max_relative_error(
        &backbone,
        || {
            let (pred, recon) = params.forward_train(&x)?;
            let main = ops::mse_loss(&pred, &y)?;
            let ae = ops::mse_loss(&recon, &x)?;
            ops::scale(&ops::add(&main, &ae)?, 0.5)
        },
        DEFAULT_H,
    )
    .unwrap();
    assert!(err < TOL, "full network: {err}");
}

#[test]
fn discriminator_gradients() {
    let cfg = ModelConfig {
        grid_height: 5,
        grid_width: 5,
        channels: 4,
        model_timesteps: 2,
        ..ModelConfig::default()
    };
    let mut params = init_params::<f64>(&cfg, 12).unwrap();
    params.ensure_discriminator(13);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let x = Tensor::from_vec(
        &[3, 1, 5, 5],
        (0..75).map(|_| f64::from(rng.gen_bool(0.4))).collect(),
    )
    .unwrap();
    let labels = Tensor::from_vec(&[3, 1], vec![1.0, 0.0, 1.0]).unwrap();
    let disc = params.discriminator_parameters();
    let err = max_relative_error(
        &disc,
        || ops::bce_loss(&params.discriminate(&x)?, &labels),
        DEFAULT_H,
    )
    .unwrap();
    assert!(err < TOL, "discriminator: {err}");
}

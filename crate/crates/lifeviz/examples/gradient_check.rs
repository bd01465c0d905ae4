//! Verifies backpropagation against central finite differences on the
//! full two-timestep network in 64-bit mode.

use lifeviz::gradcheck::{max_relative_error, DEFAULT_H};
use lifeviz::model::{init_params, ModelConfig};
use lifeviz::tensor::{ops, Tensor};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lifeviz::Result<()> {
    let cfg = ModelConfig {
        grid_height: 6,
        grid_width: 6,
        channels: 4,
        model_timesteps: 2,
        ..ModelConfig::default()
    };
    let params = init_params::<f64>(&cfg, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut random_grid = || -> Tensor<f64> {
        Tensor::from_vec(
            &[2, 1, 6, 6],
            (0..72).map(|_| f64::from(rng.gen_bool(0.4))).collect(),
        )
        .unwrap()
    };
    let x = random_grid();
    let y = random_grid();
    let backbone = params.backbone_parameters();
    let n: usize = backbone.iter().map(|p| p.value.numel()).sum();
    println!("checking {n} parameter entries against finite differences...");
    let err = max_relative_error(
        &backbone,
        || {
            let (pred, recon) = params.forward_train(&x)?;
            let main = ops::mse_loss(&pred, &y)?;
            let ae = ops::mse_loss(&recon, &x)?;
            ops::scale(&ops::add(&main, &ae)?, 0.5)
        },
        DEFAULT_H,
    )?;
    println!("max relative error: {err:.3e}");
    assert!(err < 1e-6);
    Ok(())
}

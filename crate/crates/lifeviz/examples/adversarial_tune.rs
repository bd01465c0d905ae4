//! Loads a pretrained checkpoint and runs the adversarial decoder phase
//! in chunks, printing readout accuracy, metric, and discriminator
//! calibration after each chunk — a workbench for GAN hyperparameters.
//!
//!     cargo run --release --example adversarial_tune -- ckpt.llns \
//!         [g] [chunks] [chunk_steps] [w_gen] [disc_lr] [dec_lr] [seed]

use lifeviz::harness::checkpoint::load_checkpoint;
use lifeviz::life::{self, GenConfig, Grid};
use lifeviz::train::{self, grids_to_tensor, AdvConfig, DataSource, RunRecord, TrainConfig};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

fn main() -> lifeviz::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let ckpt = args.get(1).expect("checkpoint path");
    let g: usize = args.get(2).map_or(3, |s| s.parse().expect("g"));
    let chunks: usize = args.get(3).map_or(8, |s| s.parse().expect("chunks"));
    let chunk_steps: usize = args.get(4).map_or(500, |s| s.parse().expect("chunk_steps"));
    let w_gen: f64 = args.get(5).map_or(1.0, |s| s.parse().expect("w_gen"));
    let disc_lr: f64 = args.get(6).map_or(1e-3, |s| s.parse().expect("disc_lr"));
    let dec_lr: f64 = args.get(7).map_or(1e-3, |s| s.parse().expect("dec_lr"));
    let seed: u64 = args.get(8).map_or(11, |s| s.parse().expect("seed"));
    let weight_decay: f64 = args.get(9).map_or(0.0, |s| s.parse().expect("weight_decay"));
    let noise: f64 = args.get(10).map_or(0.1, |s| s.parse().expect("instance_noise"));
    let real_label: f64 = args.get(11).map_or(0.9, |s| s.parse().expect("real_label"));
    let reinit_decoder: bool = args.get(12).map_or(false, |s| s != "0");

    let mut params = load_checkpoint::<f32>(Path::new(ckpt))?;
    if reinit_decoder {
        let fresh = lifeviz::model::init_params::<f32>(&params.cfg, seed ^ 0xF2E54)?;
        for (dst, src) in params
            .decoder_parameters()
            .iter()
            .zip(fresh.decoder_parameters())
        {
            dst.value.set_data(src.value.to_vec())?;
        }
        println!("decoder reinitialized");
    }
    let gen = GenConfig { seed, ..GenConfig::default() };
    let train_cfg = TrainConfig {
        seed,
        learning_rate: dec_lr,
        weight_decay,
        ..TrainConfig::default()
    };
    let adv = AdvConfig {
        adv_steps: chunk_steps,
        disc_learning_rate: disc_lr,
        loss_weights: [1.0, 1.0, w_gen],
        instance_noise: noise,
        real_label,
    };
    let eval_set = life::make_dataset(&GenConfig { seed: 1011, ..gen.clone() }, 256, g)?;
    let mut data = DataSource::stream(gen.clone(), g);
    let pretrained = RunRecord { steps_run: 1, ..RunRecord::default() };

    let report = |params: &lifeviz::model::NetworkParams<f32>, tag: &str| -> lifeviz::Result<()> {
        let eval = train::evaluate_accuracy(params, &eval_set)?;
        let (metric, _) = train::metric_eval(params, &gen, g, 100, 0x5C02E)?;
        // Discriminator calibration on a fresh batch.
        let mut rng = ChaCha8Rng::seed_from_u64(0xCA11B);
        let sample = life::make_dataset(&GenConfig { seed: 2022, ..gen.clone() }, 32, g)?;
        let real: Vec<Grid> = sample
            .iter()
            .map(|e| e.truth.states[rng.gen_range(0..e.truth.len())].clone())
            .collect();
        let x = grids_to_tensor::<f32>(&sample.iter().map(|e| e.first.clone()).collect::<Vec<_>>())?;
        let (_, hidden) = params.backbone_detached(&x)?;
        let (d_real, d_fake) = match params.discriminator_parameters().is_empty() {
            true => (f64::NAN, f64::NAN),
            false => {
                let dr = params.discriminate(&grids_to_tensor::<f32>(&real)?)?;
                let fake = params.decode(&hidden[0])?.detach();
                let df = params.discriminate(&fake)?;
                let mean = |t: &lifeviz::tensor::Tensor<f32>| {
                    t.data().iter().map(|v| *v as f64).sum::<f64>() / t.numel() as f64
                };
                (mean(&dr), mean(&df))
            }
        };
        let inter: Vec<String> = eval.intermediate.iter().map(|v| format!("{v:.4}")).collect();
        println!(
            "{tag}: final {:.4}  intermediate [{}]  metric {:.3}  D(real) {:.2} D(fake) {:.2}",
            eval.final_accuracy,
            inter.join(", "),
            metric,
            d_real,
            d_fake
        );
        Ok(())
    };

    report(&params, "start")?;
    for c in 1..=chunks {
        train::train_adversarial(&mut params, &train_cfg, &adv, &mut data, &eval_set, &pretrained)?;
        report(&params, &format!("after {:5} adv steps", c * chunk_steps))?;
    }
    Ok(())
}

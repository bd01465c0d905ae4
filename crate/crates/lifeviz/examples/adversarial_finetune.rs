//! Pretrains a predictor, then fine-tunes only the decoder with a
//! discriminator so decoded hidden states look like real GoL states.
//! Prints the metric before and after, and verifies the backbone froze.
//!
//!     cargo run --release --example adversarial_finetune -- [steps] [adv_steps]

use lifeviz::life::{self, GenConfig};
use lifeviz::model::{init_params, ModelConfig};
use lifeviz::train::{self, AdvConfig, DataSource, TrainConfig};

fn main() -> lifeviz::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let steps: usize = args.get(1).map_or(4000, |s| s.parse().expect("steps"));
    let adv_steps: usize = args.get(2).map_or(1000, |s| s.parse().expect("adv_steps"));
    // The mismatched g=3 / t=2 default is where adversarial fine-tuning
    // matters most: the lone hidden state h_1 has no truth state the base
    // training would align it with.
    let g: usize = args.get(3).map_or(3, |s| s.parse().expect("gol_timesteps"));
    let t: usize = args.get(4).map_or(2, |s| s.parse().expect("model_timesteps"));
    let channels: usize = args.get(5).map_or(12, |s| s.parse().expect("channels"));
    let seed: u64 = args.get(6).map_or(11, |s| s.parse().expect("seed"));
    let model_cfg = ModelConfig { model_timesteps: t, channels, ..ModelConfig::default() };
    let mut params = init_params::<f32>(&model_cfg, seed)?;
    let gen = GenConfig { seed, ..GenConfig::default() };
    let train_cfg = TrainConfig {
        max_steps: steps,
        seed,
        progress: true,
        ..TrainConfig::default()
    };
    let eval_set = life::make_dataset(&GenConfig { seed: 1011, ..gen.clone() }, 256, g)?;
    let mut data = DataSource::stream(gen.clone(), g);

    let record = train::train_main(&params, &train_cfg, &mut data, &eval_set)?;
    println!(
        "pretrained: {} steps, accuracy {:.4}, gate {}",
        record.steps_run, record.final_accuracy, record.gate_passed
    );
    let (base, _) = train::metric_eval(&params, &gen, g, 200, 77)?;
    println!("metric before adversarial fine-tuning: {base:.3}");

    let frozen_before: Vec<Vec<f32>> = params
        .encoder_rnn_parameters()
        .iter()
        .map(|p| p.value.to_vec())
        .collect();
    let adv = AdvConfig { adv_steps, ..AdvConfig::default() };
    train::train_adversarial(&mut params, &train_cfg, &adv, &mut data, &eval_set, &record)?;
    let frozen_after: Vec<Vec<f32>> = params
        .encoder_rnn_parameters()
        .iter()
        .map(|p| p.value.to_vec())
        .collect();
    assert_eq!(frozen_before, frozen_after, "backbone must not move");
    println!("encoder/RNN tensors bitwise unchanged across the adversarial phase");

    let (after, _) = train::metric_eval(&params, &gen, g, 200, 77)?;
    println!("metric after adversarial fine-tuning: {after:.3}");
    println!("headline (max of variants): {:.3}", base.max(after));
    Ok(())
}

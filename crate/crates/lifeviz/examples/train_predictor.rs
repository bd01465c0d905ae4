//! Trains a recurrent predictor of a future Game of Life state and prints
//! the loss curve, accuracy, and emergence steps.
//!
//!     cargo run --release --example train_predictor -- [steps] [gol_timesteps]

use lifeviz::life::GenConfig;
use lifeviz::model::{init_params, Activation, ModelConfig};
use lifeviz::train::{self, DataSource, TrainConfig};

fn main() -> lifeviz::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let max_steps: usize = args.get(1).map_or(2000, |s| s.parse().expect("steps"));
    let g: usize = args.get(2).map_or(3, |s| s.parse().expect("gol_timesteps"));
    let channels: usize = args.get(3).map_or(20, |s| s.parse().expect("channels"));
    let early_stop: bool = args.get(4).map_or(true, |s| s != "0");
    let learning_rate: f64 = args.get(5).map_or(1e-3, |s| s.parse().expect("lr"));
    let warmup_prob: f64 = args.get(6).map_or(0.5, |s| s.parse().expect("warmup_prob"));
    let density: f64 = args.get(7).map_or(0.38, |s| s.parse().expect("density"));
    let seed: u64 = args.get(8).map_or(42, |s| s.parse().expect("seed"));
    let batch_size: usize = args.get(9).map_or(16, |s| s.parse().expect("batch"));
    let warmup_steps: usize = args.get(10).map_or(2, |s| s.parse().expect("warmup_steps"));
    let init_scale: f64 = args.get(12).map_or(1.0, |s| s.parse().expect("init_scale"));
    let weight_decay: f64 = args.get(13).map_or(0.0, |s| s.parse().expect("weight_decay"));
    let hidden_activation = match args.get(14).map(String::as_str) {
        Some("sigmoid") => Activation::Sigmoid,
        Some("relu") | None => Activation::Relu,
        Some(other) => panic!("unknown activation {other}"),
    };
    let block_depth: usize = args.get(15).map_or(2, |s| s.parse().expect("block_depth"));
    let optimizer = match args.get(16).map(String::as_str) {
        Some("sgd") => lifeviz::train::OptimizerKind::Sgd,
        Some("adam") | None => lifeviz::train::OptimizerKind::Adam,
        Some(other) => panic!("unknown optimizer {other}"),
    };
    let hidden_dropout: f64 = args.get(17).map_or(0.0, |s| s.parse().expect("hidden_dropout"));

    let model_cfg = ModelConfig {
        model_timesteps: g,
        channels,
        hidden_activation,
        rnn_layers_per_block: block_depth,
        ..ModelConfig::default()
    };
    let params = init_params::<f32>(&model_cfg, seed)?;
    if init_scale != 1.0 {
        for p in params.backbone_parameters() {
            let scaled: Vec<f32> = p.value.to_vec().iter().map(|v| v * init_scale as f32).collect();
            p.value.set_data(scaled)?;
        }
    }
    let gen = GenConfig {
        warmup_prob,
        warmup_steps,
        density,
        seed,
        ..GenConfig::default()
    };
    let train_cfg = TrainConfig {
        max_steps,
        seed,
        early_stop,
        progress: true,
        learning_rate,
        batch_size,
        weight_decay,
        optimizer,
        hidden_dropout,
        ..TrainConfig::default()
    };
    let eval_set = lifeviz::life::make_dataset(
        &GenConfig { seed: 0xE7A1, ..gen.clone() },
        train_cfg.eval_set_size,
        g,
    )?;
    let mut data = DataSource::stream(gen.clone(), g);

    let t0 = std::time::Instant::now();
    let record = train::train_main(&params, &train_cfg, &mut data, &eval_set)?;
    let dt = t0.elapsed().as_secs_f64();

    for e in record.eval_history.iter() {
        let inter: Vec<String> = e.intermediate.iter().map(|v| format!("{v:.4}")).collect();
        println!(
            "step {:5}  final acc {:.4}  intermediate acc [{}]",
            e.step,
            e.final_accuracy,
            inter.join(", ")
        );
    }
    println!(
        "ran {} steps in {:.1}s ({:.1} steps/s)",
        record.steps_run,
        dt,
        record.steps_run as f64 / dt
    );
    println!(
        "final accuracy {:.4}  gate(>=99%) {}",
        record.final_accuracy, record.gate_passed
    );
    println!("final-state emergence step: {:?}", record.final_emergence_step);
    for (i, s) in record.emergence_steps.iter().enumerate() {
        println!("hidden state h_{} emergence step: {:?}", i + 1, s);
    }
    let eval = train::evaluate_accuracy(&params, &eval_set)?;
    for (i, acc) in eval.intermediate.iter().enumerate() {
        println!("decoded h_{} accuracy vs s_{}: {:.4}", i + 1, i + 2, acc);
    }
    if g >= 2 {
        let (mean, _) = train::metric_eval(&params, &gen, g, 100, 0x5C02E)?;
        println!("interpretability metric (mean over 100 sequences): {mean:.3}");
    }
    if let Some(path) = args.get(11) {
        lifeviz::harness::checkpoint::save_checkpoint(std::path::Path::new(path), &params)?;
        println!("checkpoint written to {path}");
    }
    Ok(())
}

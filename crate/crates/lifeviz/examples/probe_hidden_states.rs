//! Diagnostic: given a trained checkpoint, train a *fresh* readout conv
//! per hidden state (backbone frozen) against the true intermediate
//! board. High probe accuracy means the information is present and only
//! the readout is misaligned; probe failure means the hidden state does
//! not carry the intermediate board in linearly-decodable form.
//!
//!     cargo run --release --example probe_hidden_states -- ckpt.llns \
//!         [gol_timesteps] [probe_steps] [warmup_prob] [density] [warmup_steps]

use lifeviz::harness::checkpoint::load_checkpoint;
use lifeviz::life::{GenConfig, Grid};
use lifeviz::tensor::optim::{Adam, Parameter};
use lifeviz::tensor::{ops, Tensor};
use lifeviz::train::{grids_to_tensor, DataSource};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

fn main() -> lifeviz::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let ckpt = args.get(1).expect("checkpoint path");
    let g: usize = args.get(2).map_or(3, |s| s.parse().expect("gol_timesteps"));
    let probe_steps: usize = args.get(3).map_or(1500, |s| s.parse().expect("probe_steps"));
    let warmup_prob: f64 = args.get(4).map_or(0.5, |s| s.parse().expect("warmup_prob"));
    let density: f64 = args.get(5).map_or(0.38, |s| s.parse().expect("density"));
    let warmup_steps: usize = args.get(6).map_or(2, |s| s.parse().expect("warmup_steps"));

    let params = load_checkpoint::<f32>(Path::new(ckpt))?;
    let c = params.cfg.channels;
    let t = params.cfg.model_timesteps;
    let gen = GenConfig {
        warmup_prob,
        density,
        warmup_steps,
        seed: 97,
        ..GenConfig::default()
    };
    let mut data = DataSource::stream(gen.clone(), g);

    // One probe (3x3 conv C->1 + sigmoid) per hidden state h_1..h_t.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let std = (2.0 / (c * 9) as f64).sqrt();
    let mut probes: Vec<(Parameter<f32>, Parameter<f32>)> = (0..t)
        .map(|i| {
            let w: Vec<f32> = (0..c * 9)
                .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) as f32 * std as f32)
                .collect();
            (
                Parameter::new(
                    format!("probe.{i}.weight"),
                    Tensor::param_from_vec(&[1, c, 3, 3], w).unwrap(),
                ),
                Parameter::new(
                    format!("probe.{i}.bias"),
                    Tensor::param_from_vec(&[1], vec![0.0f32]).unwrap(),
                ),
            )
        })
        .collect();
    let flat: Vec<Parameter<f32>> = probes
        .iter()
        .flat_map(|(w, b)| [w.clone(), b.clone()])
        .collect();
    let mut adam = Adam::new(1e-2);

    for step in 1..=probe_steps {
        let batch = data.next_batch(16)?;
        let firsts: Vec<Grid> = batch.iter().map(|e| e.first.clone()).collect();
        let x = grids_to_tensor::<f32>(&firsts)?;
        let (_, hidden) = params.backbone_detached(&x)?;
        let mut total: Option<Tensor<f32>> = None;
        for (i, (w, b)) in probes.iter_mut().enumerate() {
            // h_i should decode to s_{i+2} when g == t; cap at the end.
            let target_idx = (i + 1).min(g);
            let targets: Vec<Grid> = batch
                .iter()
                .map(|e| e.truth.states[target_idx].clone())
                .collect();
            let y = grids_to_tensor::<f32>(&targets)?;
            let pred = ops::sigmoid(&ops::conv2d_circular(&hidden[i], &w.value, &b.value)?)?;
            let loss = ops::mse_loss(&pred, &y)?;
            total = Some(match total {
                None => loss,
                Some(acc) => ops::add(&acc, &loss)?,
            });
        }
        total.unwrap().backward()?;
        adam.step(&flat)?;
        if step % 500 == 0 {
            eprintln!("probe step {step}");
        }
    }

    // Evaluate probe accuracy on fresh data.
    let eval = lifeviz::life::make_dataset(&GenConfig { seed: 4242, ..gen }, 256, g)?;
    let mut correct = vec![0usize; t];
    let mut count = 0usize;
    for chunk in eval.chunks(32) {
        let firsts: Vec<Grid> = chunk.iter().map(|e| e.first.clone()).collect();
        let x = grids_to_tensor::<f32>(&firsts)?;
        let (_, hidden) = params.backbone_detached(&x)?;
        for (i, (w, b)) in probes.iter().enumerate() {
            let target_idx = (i + 1).min(g);
            let pred = ops::sigmoid(&ops::conv2d_circular(&hidden[i], &w.value, &b.value)?)?;
            let grids = lifeviz::train::threshold(&pred, 0.5)?;
            for (bi, e) in chunk.iter().enumerate() {
                let truth = &e.truth.states[target_idx];
                correct[i] += grids[bi]
                    .cells()
                    .iter()
                    .zip(truth.cells())
                    .filter(|(a, b)| a == b)
                    .count();
            }
        }
        count += chunk.len();
    }
    for i in 0..t {
        let acc = correct[i] as f64 / (count * 256) as f64;
        println!(
            "probe accuracy: h_{} vs s_{}: {:.4}",
            i + 1,
            (i + 1).min(g) + 1,
            acc
        );
    }

    // Joint feasibility: can ONE decoder simultaneously read the encoder
    // output (s_1), every hidden state (s_2..), and stay a single conv?
    // This is supervised cheating (uses the intermediate truths), purely
    // to check whether a decoder the adversarial phase could converge to
    // exists at all.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let w: Vec<f32> = (0..c * 9)
        .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) as f32 * std as f32)
        .collect();
    let jw = Parameter::new(
        "joint.weight".to_string(),
        Tensor::param_from_vec(&[1, c, 3, 3], w).unwrap(),
    );
    let jb = Parameter::new(
        "joint.bias".to_string(),
        Tensor::param_from_vec(&[1], vec![0.0f32]).unwrap(),
    );
    let joint = [jw.clone(), jb.clone()];
    let mut adam = Adam::new(1e-2);
    let mut data = DataSource::stream(gen.clone(), g);
    for step in 1..=probe_steps {
        let batch = data.next_batch(16)?;
        let firsts: Vec<Grid> = batch.iter().map(|e| e.first.clone()).collect();
        let x = grids_to_tensor::<f32>(&firsts)?;
        let (enc, hidden) = params.backbone_detached(&x)?;
        let mut total: Option<Tensor<f32>> = None;
        for (idx, h) in std::iter::once(&enc).chain(hidden.iter()).enumerate() {
            let target_idx = idx.min(g);
            let targets: Vec<Grid> = batch
                .iter()
                .map(|e| e.truth.states[target_idx].clone())
                .collect();
            let y = grids_to_tensor::<f32>(&targets)?;
            let pred = ops::sigmoid(&ops::conv2d_circular(h, &jw.value, &jb.value)?)?;
            let loss = ops::mse_loss(&pred, &y)?;
            total = Some(match total {
                None => loss,
                Some(acc) => ops::add(&acc, &loss)?,
            });
        }
        total.unwrap().backward()?;
        adam.step(&joint)?;
        if step % 500 == 0 {
            eprintln!("joint step {step}");
        }
    }
    let mut correct = vec![0usize; t + 1];
    let mut count = 0usize;
    for chunk in eval.chunks(32) {
        let firsts: Vec<Grid> = chunk.iter().map(|e| e.first.clone()).collect();
        let x = grids_to_tensor::<f32>(&firsts)?;
        let (enc, hidden) = params.backbone_detached(&x)?;
        for (idx, h) in std::iter::once(&enc).chain(hidden.iter()).enumerate() {
            let target_idx = idx.min(g);
            let pred = ops::sigmoid(&ops::conv2d_circular(h, &jw.value, &jb.value)?)?;
            let grids = lifeviz::train::threshold(&pred, 0.5)?;
            for (bi, e) in chunk.iter().enumerate() {
                let truth = &e.truth.states[target_idx];
                correct[idx] += grids[bi]
                    .cells()
                    .iter()
                    .zip(truth.cells())
                    .filter(|(a, b)| a == b)
                    .count();
            }
        }
        count += chunk.len();
    }
    for (idx, c) in correct.iter().enumerate() {
        let acc = *c as f64 / (count * 256) as f64;
        let src = if idx == 0 {
            "enc".to_string()
        } else {
            format!("h_{idx}")
        };
        println!("joint decoder: {src} vs s_{}: {acc:.4}", idx.min(g) + 1);
    }
    Ok(())
}

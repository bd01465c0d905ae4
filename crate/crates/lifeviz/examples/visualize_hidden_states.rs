//! Trains a small predictor, then renders what the decoder sees in the
//! intermediate hidden states next to the ground truth sequence.
//!
//!     cargo run --release --example visualize_hidden_states -- [steps]

use lifeviz::life::{self, GenConfig};
use lifeviz::model::{init_params, ModelConfig};
use lifeviz::train::{self, DataSource, TrainConfig};

fn render_row(grids: &[(String, Vec<f32>)], w: usize, h: usize) {
    for (label, _) in grids {
        print!("{label:<w$} ", w = w + 1);
    }
    println!();
    for y in 0..h {
        for (_, cells) in grids {
            for x in 0..w {
                let v = cells[y * w + x];
                print!("{}", if v > 0.75 { '#' } else if v > 0.25 { '+' } else { '.' });
            }
            print!(" ");
        }
        println!();
    }
}

fn main() -> lifeviz::Result<()> {
    let steps: usize = std::env::args().nth(1).map_or(4000, |s| s.parse().expect("steps"));
    let g = 3usize;
    let model_cfg = ModelConfig {
        model_timesteps: g,
        channels: 12,
        ..ModelConfig::default()
    };
    let params = init_params::<f32>(&model_cfg, 5)?;
    let gen = GenConfig { seed: 5, ..GenConfig::default() };
    let train_cfg = TrainConfig { max_steps: steps, seed: 5, ..TrainConfig::default() };
    let eval_set = life::make_dataset(&GenConfig { seed: 1005, ..gen.clone() }, 256, g)?;
    let mut data = DataSource::stream(gen.clone(), g);
    let record = train::train_main(&params, &train_cfg, &mut data, &eval_set)?;
    println!(
        "trained {} steps, final accuracy {:.4}\n",
        record.steps_run, record.final_accuracy
    );

    let mut rng = GenConfig { seed: 31337, ..gen }.rng();
    for _ in 0..3 {
        let ex = life::make_example(&GenConfig { seed: 0, ..Default::default() }, g, &mut rng)?;
        let x = train::grids_to_tensor::<f32>(std::slice::from_ref(&ex.first))?;
        let trace = params.forward_inference(&x)?;
        let mut row: Vec<(String, Vec<f32>)> = Vec::new();
        row.push(("s_1".into(), ex.first.cells().iter().map(|&c| c as f32).collect()));
        for (i, d) in trace.decoded.iter().enumerate() {
            row.push((format!("dec(h_{})", i + 1), d.to_vec()));
            row.push((
                format!("s_{}", i + 2),
                ex.truth.states[i + 1].cells().iter().map(|&c| c as f32).collect(),
            ));
        }
        row.push(("prediction".into(), trace.final_pred.to_vec()));
        row.push(("s_final".into(), ex.target.cells().iter().map(|&c| c as f32).collect()));
        render_row(&row, ex.first.width(), ex.first.height());
        println!();
    }
    Ok(())
}

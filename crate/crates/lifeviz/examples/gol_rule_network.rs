//! Builds the hand-constructed network whose single RNN block applies one
//! exact Game of Life step, and checks it against the reference engine.

use lifeviz::life::{self, GenConfig};
use lifeviz::model::{construct_gol_step_params, ModelConfig};
use lifeviz::train::{grids_to_tensor, metric_eval, threshold};

fn main() -> lifeviz::Result<()> {
    let cfg = ModelConfig {
        channels: 4,
        model_timesteps: 3,
        ..ModelConfig::default()
    };
    let params = construct_gol_step_params::<f32>(&cfg)?;

    let gen = GenConfig { seed: 99, ..GenConfig::default() };
    let mut rng = gen.rng();
    let mut checked = 0usize;
    for _ in 0..200 {
        let g = life::random_grid(&gen, &mut rng);
        let x = grids_to_tensor::<f32>(std::slice::from_ref(&g))?;
        let trace = params.forward_inference(&x)?;
        // h_1 decodes to step(g), h_2 to step^2(g), the output to step^3(g).
        let mut expect = g.clone();
        for d in trace.decoded.iter().chain(std::iter::once(&trace.final_pred)) {
            expect = life::step(&expect);
            assert_eq!(threshold(d, 0.5)?[0], expect, "rule network diverged");
            checked += 1;
        }
    }
    println!("exact match with the engine on {checked} decoded states");

    let (mean, _) = metric_eval(&params, &gen, 3, 200, 1)?;
    println!("interpretability metric over 200 sequences: {mean}");
    assert_eq!(mean, 1.0);
    Ok(())
}

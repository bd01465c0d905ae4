//! Runs a small sweep over the autoencoder ablation and prints the
//! resulting table, mirroring the structure of the result tables.
//!
//!     cargo run --release --example sweep_ablation -- [max_steps] [runs_per_cell]

use lifeviz::harness::config::{ExperimentConfig, SweepCell, SweepConfig};
use lifeviz::harness::sweep::run_sweep;

fn main() -> lifeviz::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let max_steps: usize = args.get(1).map_or(3000, |s| s.parse().expect("max_steps"));
    let runs: usize = args.get(2).map_or(2, |s| s.parse().expect("runs_per_cell"));

    let mut base = ExperimentConfig::default();
    base.model.channels = 12;
    base.train.max_steps = max_steps;
    base.metric_eval_sequences = 200;
    base.runs_per_cell = runs;
    let sweep = SweepConfig {
        base,
        master_seed: 1,
        cells: vec![
            SweepCell { gol_timesteps: 2, model_timesteps: 2, use_autoencoder: true, use_rnn: true },
            SweepCell { gol_timesteps: 2, model_timesteps: 2, use_autoencoder: false, use_rnn: true },
        ],
    };
    let report = run_sweep(&sweep, 1)?;
    print!("{}", report.to_csv());
    Ok(())
}

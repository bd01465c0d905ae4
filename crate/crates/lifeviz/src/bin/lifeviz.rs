//! Experiment runner CLI: dataset generation, training, evaluation,
//! sweeps, and report rendering, all driven by TOML config files.

use clap::{Parser, Subcommand};
use lifeviz::harness::commands::{cmd_eval, cmd_generate, cmd_report, cmd_train};
use lifeviz::harness::config::{ExperimentConfig, SweepConfig};
use lifeviz::harness::sweep::cmd_sweep;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lifeviz", about = "Game of Life future-state prediction experiments")]
struct Cli {
    /// TOML configuration file (experiment config; sweep config for `sweep`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed (train/generation seed, or sweep master seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Paper-scale evaluation: 10,000 metric sequences, 6 runs per cell.
    #[arg(long, global = true, default_value_t = false)]
    paper_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a binary dataset of (first, target, truth) examples.
    Generate,
    /// Train one model; writes logs, a summary, and checkpoints.
    Train,
    /// Score a checkpoint with the interpretability metric; writes CSV and PGM strips.
    Eval {
        /// Checkpoint to evaluate.
        checkpoint: PathBuf,
    },
    /// Run a grid of configurations and write the result table.
    Sweep,
    /// Summarize a directory of training runs.
    Report {
        /// Directory holding run subdirectories.
        dir: PathBuf,
    },
}

fn experiment_config(cli: &Cli) -> lifeviz::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.train.seed = seed;
        cfg.gen.seed = seed;
    }
    if cli.paper_scale {
        cfg.metric_eval_sequences = 10_000;
        cfg.runs_per_cell = cfg.runs_per_cell.max(6);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> lifeviz::Result<bool> {
    match &cli.command {
        Command::Generate => {
            let cfg = experiment_config(cli)?;
            let path = cmd_generate(&cfg, &cli.out)?;
            println!("wrote {}", path.display());
            Ok(true)
        }
        Command::Train => {
            let cfg = experiment_config(cli)?;
            let summary = cmd_train(&cfg, &cli.out)?;
            println!(
                "seed {} steps {} accuracy {:.4} gate {} metric_base {:.4} metric_max {:.4}",
                summary.seed,
                summary.record.steps_run,
                summary.record.final_accuracy,
                if summary.record.gate_passed { "PASS" } else { "FAIL" },
                summary.metric_base,
                summary.metric_max(),
            );
            Ok(summary.record.gate_passed)
        }
        Command::Eval { checkpoint } => {
            let cfg = experiment_config(cli)?;
            let mean = cmd_eval(checkpoint, &cfg, &cli.out)?;
            println!("mean metric over {} sequences: {:.4}", cfg.metric_eval_sequences, mean);
            Ok(true)
        }
        Command::Sweep => {
            let path = cli
                .config
                .as_ref()
                .ok_or_else(|| lifeviz::Error::invalid("sweep requires --config"))?;
            let mut cfg = SweepConfig::load(path)?;
            if let Some(seed) = cli.seed {
                cfg.master_seed = seed;
            }
            if cli.paper_scale {
                cfg.base.metric_eval_sequences = 10_000;
                cfg.base.runs_per_cell = cfg.base.runs_per_cell.max(6);
            }
            let report = cmd_sweep(&cfg, &cli.out, cli.workers)?;
            print!("{}", report.to_csv());
            Ok(true)
        }
        Command::Report { dir } => {
            let text = cmd_report(dir)?;
            print!("{text}");
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        // Train with a failed gate: artifacts written, nonzero status.
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

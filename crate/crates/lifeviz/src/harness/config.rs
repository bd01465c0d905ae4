//! TOML experiment and sweep configuration.

use crate::error::{Error, Result};
use crate::life::GenConfig;
use crate::model::ModelConfig;
use crate::train::{AdvConfig, TrainConfig};
use std::path::Path;

/// Everything one experiment needs: generation, model, training, and
/// evaluation settings. Serialized as TOML with one section per part.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Number of GoL steps between the input state and the target state.
    pub gol_timesteps: usize,
    /// Examples written by the generate command.
    pub dataset_count: usize,
    /// Fresh sequences scored by the eval command.
    pub metric_eval_sequences: usize,
    /// Runs per sweep cell.
    pub runs_per_cell: usize,
    pub gen: GenConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Presence enables the adversarial fine-tuning phase.
    pub adv: Option<AdvConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            gol_timesteps: 3,
            dataset_count: 1024,
            metric_eval_sequences: 1000,
            runs_per_cell: 3,
            gen: GenConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            adv: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gol_timesteps == 0 {
            return Err(Error::invalid("gol_timesteps must be positive"));
        }
        if self.runs_per_cell == 0 {
            return Err(Error::invalid("runs_per_cell must be positive"));
        }
        if self.model.grid_width != self.gen.width || self.model.grid_height != self.gen.height {
            return Err(Error::invalid(format!(
                "model grid {}x{} does not match generator grid {}x{}",
                self.model.grid_width, self.model.grid_height, self.gen.width, self.gen.height
            )));
        }
        self.model.validate()?;
        self.train.validate()?;
        if let Some(adv) = &self.adv {
            adv.validate()?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("serialize: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// One cell of a sweep grid: the four columns the result tables vary.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SweepCell {
    pub gol_timesteps: usize,
    pub model_timesteps: usize,
    pub use_autoencoder: bool,
    /// Weight sharing across RNN timesteps.
    pub use_rnn: bool,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    pub master_seed: u64,
    pub cells: Vec<SweepCell>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            base: ExperimentConfig::default(),
            master_seed: 0,
            cells: Vec::new(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.cells.is_empty() {
            return Err(Error::invalid("sweep has no cells"));
        }
        for c in &self.cells {
            if c.gol_timesteps == 0 || c.model_timesteps < 2 {
                return Err(Error::invalid(
                    "sweep cell needs gol_timesteps >= 1 and model_timesteps >= 2",
                ));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: SweepConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The experiment for one cell and run index. Per-run seeds are the
    /// master seed plus a global run counter so every run is replayable.
    pub fn cell_experiment(&self, cell: &SweepCell, run_seed: u64) -> ExperimentConfig {
        let mut cfg = self.base.clone();
        cfg.gol_timesteps = cell.gol_timesteps;
        cfg.model.model_timesteps = cell.model_timesteps;
        cfg.model.weight_sharing = cell.use_rnn;
        cfg.train.use_autoencoder = cell.use_autoencoder;
        cfg.train.seed = run_seed;
        cfg.gen.seed = run_seed;
        cfg
    }
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cgan::{CganConfig, DiscriminatorConfig, GeneratorConfig, TrainConfig};
use crate::detector::{DetectorConfig, DetectorTrainConfig};
use crate::error::{Error, Result};
use crate::simulator::{InterferenceModel, DEFAULT_LENGTH};
use crate::spectrum::Interference;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Records per evaluation condition.
    pub n_per_condition: usize,
    pub length: usize,
    pub interference: Interference,
    /// Overrides the preset's noise level.
    pub noise_std: Option<f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            n_per_condition: 12,
            length: DEFAULT_LENGTH,
            interference: Interference::None,
            noise_std: None,
        }
    }
}

impl SimulateConfig {
    pub fn model(&self) -> InterferenceModel {
        let m = InterferenceModel::preset(self.interference);
        match self.noise_std {
            Some(s) => m.with_noise(s),
            None => m,
        }
    }
}

/// Every parameter of a run. Written back out as `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub simulate: SimulateConfig,
    pub gan: CganConfig,
    pub detector: DetectorConfig,
    pub detector_train: DetectorTrainConfig,
    /// Synthetic-record counts added to the real pool, one detector per step.
    pub ladder: Vec<usize>,
    /// Held-out simulated records per condition for detector validation.
    pub validation_per_condition: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            simulate: SimulateConfig::default(),
            gan: CganConfig::default(),
            detector: DetectorConfig::default(),
            detector_train: DetectorTrainConfig::default(),
            ladder: vec![12, 123, 307, 615, 922],
            validation_per_condition: 10,
        }
    }
}

impl RunConfig {
    /// Small models that train on one CPU core in minutes.
    pub fn desk() -> Self {
        Self {
            gan: CganConfig {
                generator: GeneratorConfig {
                    embed_dim: 32,
                    noise_dim: 16,
                    hidden_dim: 64,
                    depth: 4,
                    output_dim: DEFAULT_LENGTH,
                    heads: 4,
                    dropout_p: 0.0,
                    seq_len: 32,
                    ..GeneratorConfig::default()
                },
                discriminator: DiscriminatorConfig::default(),
                train: TrainConfig {
                    iterations: 3000,
                    lr_g: 2e-4,
                    lr_d: 1e-4,
                    batch: 16,
                    stft_window: 8,
                    stft_hop: 2,
                    ..TrainConfig::default()
                },
            },
            detector: DetectorConfig {
                gc_dim: 16,
                gc_ffn_dim: 32,
                encoder_dim: 32,
                ffn_dim: 64,
                ..DetectorConfig::default()
            },
            detector_train: DetectorTrainConfig {
                epochs: 10,
                batch: 16,
                lr: 1e-3,
                gc_records_per_epoch: Some(32),
                ..DetectorTrainConfig::default()
            },
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    /// Propagates the global seed and checks every section.
    pub fn resolve(mut self) -> Result<Self> {
        self.gan.train.seed = self.seed;
        self.detector_train.seed = self.seed;
        self.simulate.model().validate()?;
        if self.simulate.n_per_condition == 0 {
            return Err(Error::config("n_per_condition must be positive"));
        }
        if self.simulate.length < crate::simulator::MIN_LENGTH {
            return Err(Error::config(format!(
                "length {} is below the minimum {}",
                self.simulate.length,
                crate::simulator::MIN_LENGTH
            )));
        }
        self.detector.validate()?;
        self.detector_train.validate()?;
        Ok(self)
    }
}

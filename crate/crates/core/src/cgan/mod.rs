//! Conditional generator and discriminator with composite losses.

mod discriminator;
mod embed;
mod generator;
mod loss;
mod stft;
mod train;

pub use discriminator::{DiscCache, Discriminator};
pub use embed::ConditionEmbedding;
pub use generator::{GenCache, Generator};
pub use loss::{discriminator_loss, discriminator_loss_grads, generator_loss, GeneratorLoss};
pub use stft::{Stft, StftCache};
pub use train::{generate, train_cgan, Cgan, LossHistory, LossRecord, TrainOutcome, CGAN_KIND};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub solvent_dim: usize,
    pub solute_dim: usize,
    pub embed_dim: usize,
    pub noise_dim: usize,
    pub hidden_dim: usize,
    /// Dense layers between the fused condition and the upsampled sequence.
    pub depth: usize,
    pub output_dim: usize,
    pub heads: usize,
    pub dropout_p: f64,
    /// Token count of the upsampled sequence.
    pub seq_len: usize,
    pub refine_kernel: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            solvent_dim: 4,
            solute_dim: 6,
            embed_dim: 100,
            noise_dim: 64,
            hidden_dim: 32,
            depth: 16,
            output_dim: 5347,
            heads: 4,
            dropout_p: 0.1,
            seq_len: 64,
            refine_kernel: 5,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.solvent_dim != 4 || self.solute_dim != 6 {
            return Err(Error::config("label dimensions are fixed at 4 solvents and 6 solutes"));
        }
        if self.heads == 0 || self.embed_dim % self.heads != 0 {
            return Err(Error::config(format!(
                "embed_dim {} is not divisible by {} heads",
                self.embed_dim, self.heads
            )));
        }
        if self.output_dim < 8 {
            return Err(Error::config("output_dim must be at least 8"));
        }
        if self.depth < 2 {
            return Err(Error::config("generator depth must be at least 2"));
        }
        if self.seq_len < 2 || self.noise_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::config("seq_len must be >= 2 and noise/hidden widths positive"));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::config("dropout_p must lie in [0, 1)"));
        }
        if self.refine_kernel % 2 == 0 {
            return Err(Error::config("refine_kernel must be odd"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscriminatorConfig {
    pub channels: (usize, usize),
    pub heads: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self {
            channels: (8, 16),
            heads: 2,
            embed_dim: 16,
            hidden_dim: 32,
        }
    }
}

impl DiscriminatorConfig {
    pub fn validate(&self, input_len: usize) -> Result<()> {
        if self.channels.0 == 0 || self.heads == 0 || self.channels.1 % self.heads != 0 {
            return Err(Error::config(format!(
                "discriminator width {} is not divisible by {} heads",
                self.channels.1, self.heads
            )));
        }
        if input_len < 8 {
            return Err(Error::config("discriminator input must have at least 8 samples"));
        }
        if self.embed_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::config("discriminator widths must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub iterations: usize,
    pub lr_g: f64,
    pub lr_d: f64,
    pub batch: usize,
    /// Weight of the spectral reconstruction term.
    pub lambda: f64,
    /// Stored for completeness; no loss term uses it.
    pub mu: f64,
    pub seed: u64,
    pub stft_window: usize,
    pub stft_hop: usize,
    /// Iterations between checkpoints; 0 disables them.
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 100_000,
            lr_g: 1e-4,
            lr_d: 1e-5,
            batch: 128,
            lambda: 1.0,
            mu: 0.0,
            seed: 0,
            stft_window: 64,
            stft_hop: 32,
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::config("lambda must be non-negative"));
        }
        if self.batch == 0 {
            return Err(Error::config("batch must be at least 1"));
        }
        if !(self.lr_g > 0.0 && self.lr_d > 0.0) {
            return Err(Error::config("learning rates must be positive"));
        }
        Ok(())
    }
}

/// Everything needed to build and train a conditional model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CganConfig {
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
    pub train: TrainConfig,
}

impl CganConfig {
    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.discriminator.validate(self.generator.output_dim)?;
        self.train.validate()?;
        Stft::new(self.train.stft_window, self.train.stft_hop)?.frames(self.generator.output_dim)?;
        Ok(())
    }
}

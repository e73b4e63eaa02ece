use super::Stft;
use crate::error::{Error, Result};
use crate::nn::{sigmoid_scalar, softplus};

/// `½ mean (D_real − 1)² + ½ mean D_fake²` on raw scores.
pub fn discriminator_loss(d_real: &[f64], d_fake: &[f64]) -> f64 {
    let r = d_real.iter().map(|d| (d - 1.0).powi(2)).sum::<f64>() / d_real.len().max(1) as f64;
    let f = d_fake.iter().map(|d| d * d).sum::<f64>() / d_fake.len().max(1) as f64;
    0.5 * (r + f)
}

/// Gradients of [`discriminator_loss`] with respect to each score.
pub fn discriminator_loss_grads(d_real: &[f64], d_fake: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nr = d_real.len().max(1) as f64;
    let nf = d_fake.len().max(1) as f64;
    (
        d_real.iter().map(|d| (d - 1.0) / nr).collect(),
        d_fake.iter().map(|d| d / nf).collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorLoss {
    /// Batch mean of `−log σ(D_fake)`.
    pub adversarial: f64,
    /// Batch mean of the squared magnitude-spectrogram distance, unweighted.
    pub spectral: f64,
    pub total: f64,
    /// Gradient with respect to each fake score.
    pub d_scores: Vec<f64>,
    /// Gradient with respect to each generated signal.
    pub d_generated: Vec<Vec<f64>>,
}

/// `mean −log σ(D_fake) + λ · mean ‖STFT(x) − STFT(x̂)‖²` and its gradients.
pub fn generator_loss(
    d_fake: &[f64],
    real: &[Vec<f64>],
    generated: &[Vec<f64>],
    lambda: f64,
    stft: &Stft,
) -> Result<GeneratorLoss> {
    if real.len() != generated.len() || real.len() != d_fake.len() || real.is_empty() {
        return Err(Error::contract("generator loss needs equally sized non-empty batches"));
    }
    let n = d_fake.len() as f64;
    let adversarial = d_fake.iter().map(|d| softplus(-d)).sum::<f64>() / n;
    let d_scores = d_fake.iter().map(|d| -sigmoid_scalar(-d) / n).collect();
    let mut spectral = 0.0;
    let mut d_generated = Vec::with_capacity(generated.len());
    for (x, xh) in real.iter().zip(generated) {
        if x.len() != xh.len() {
            return Err(Error::contract("real and generated signals differ in length"));
        }
        let sx = stft.magnitudes(x)?;
        let cache = stft.forward(xh)?;
        let diff: Vec<f64> = cache.magnitudes().iter().zip(&sx).map(|(g, r)| g - r).collect();
        spectral += diff.iter().map(|d| d * d).sum::<f64>();
        let dmag: Vec<f64> = diff.iter().map(|d| 2.0 * lambda * d / n).collect();
        d_generated.push(if lambda == 0.0 { vec![0.0; xh.len()] } else { stft.backward(&cache, xh.len(), &dmag) });
    }
    spectral /= n;
    Ok(GeneratorLoss {
        adversarial,
        spectral,
        total: adversarial + lambda * spectral,
        d_scores,
        d_generated,
    })
}

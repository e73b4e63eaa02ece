//! Slope-driven attention over a 1-D signal.
//!
//! Weights come from the absolute first difference of the (min-max
//! normalized) signal, pass through a max-shifted softmax, get one zero
//! appended so the vector has the signal's length again, and are finally
//! refined by a learnable length-preserving convolution and a sigmoid.
//!
//! Alignment: `raw[i]` is the weight of the step from sample `i` to sample
//! `i + 1`; the appended pad sits at index `T - 1` and is always zero.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{branch, sigmoid, sigmoid_backward, softmax_backward, Conv1d, Param};

/// Raw and refined attention for one signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionWeights {
    pub raw_alpha: Vec<f64>,
    pub refined_alpha: Vec<f64>,
}

/// `|x[t] - x[t-1]|` for every adjacent pair.
pub fn slopes(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::contract("slopes need at least two samples"));
    }
    Ok(x.windows(2).map(|w| (w[1] - w[0]).abs()).collect())
}

/// Softmax over the slopes with a trailing zero pad; output length is `s.len() + 1`.
pub fn slope_softmax(s: &[f64]) -> Vec<f64> {
    let m = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = s.iter().map(|v| (v - m).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out.push(0.0);
    out
}

/// Values the backward pass of [`raw_attention_forward`] needs.
#[derive(Debug, Clone)]
pub struct RawAttentionCache {
    normalized: Vec<f64>,
    range: f64,
    argmin: usize,
    argmax: usize,
    alpha: Vec<f64>,
}

/// Normalizes `profile` to [0, 1], then applies [`slopes`] and [`slope_softmax`].
pub fn raw_attention_forward(profile: &[f64]) -> Result<(Vec<f64>, RawAttentionCache)> {
    if profile.len() < 2 {
        return Err(Error::contract("attention needs at least two positions"));
    }
    let (mut argmin, mut argmax) = (0, 0);
    for (i, v) in profile.iter().enumerate() {
        if *v < profile[argmin] {
            argmin = i;
        }
        if *v > profile[argmax] {
            argmax = i;
        }
    }
    branch::record_index(argmin);
    branch::record_index(argmax);
    let range = profile[argmax] - profile[argmin];
    let normalized: Vec<f64> = if range > 0.0 {
        profile.iter().map(|v| (v - profile[argmin]) / range).collect()
    } else {
        vec![0.0; profile.len()]
    };
    let diffs: Vec<f64> = normalized.windows(2).map(|w| w[1] - w[0]).collect();
    branch::record_signs(&diffs);
    let alpha = slope_softmax(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let cache = RawAttentionCache {
        normalized,
        range,
        argmin,
        argmax,
        alpha: alpha.clone(),
    };
    Ok((alpha, cache))
}

pub fn raw_attention(profile: &[f64]) -> Result<Vec<f64>> {
    Ok(raw_attention_forward(profile)?.0)
}

/// Gradient of the raw weights with respect to the profile.
pub fn raw_attention_backward(cache: &RawAttentionCache, dalpha: &[f64]) -> Vec<f64> {
    let t = cache.normalized.len();
    let a = &cache.alpha[..t - 1];
    let ds = softmax_backward(a, &dalpha[..t - 1], t - 1);
    let mut dn = vec![0.0; t];
    for i in 0..t - 1 {
        let diff = cache.normalized[i + 1] - cache.normalized[i];
        let sign = if diff > 0.0 {
            1.0
        } else if diff < 0.0 {
            -1.0
        } else {
            0.0
        };
        dn[i + 1] += sign * ds[i];
        dn[i] -= sign * ds[i];
    }
    let mut dp = vec![0.0; t];
    if cache.range > 0.0 {
        let r = cache.range;
        let mut to_min = 0.0;
        let mut to_max = 0.0;
        for (j, g) in dn.iter().enumerate() {
            dp[j] += g / r;
            to_min += g * (cache.normalized[j] - 1.0) / r;
            to_max -= g * cache.normalized[j] / r;
        }
        dp[cache.argmin] += to_min;
        dp[cache.argmax] += to_max;
    }
    dp
}

/// Learnable single-channel convolution followed by a sigmoid.
#[derive(Debug, Clone)]
pub struct PeakRefiner {
    pub conv: Conv1d,
}

crate::impl_parameterized!(PeakRefiner { conv });

impl PeakRefiner {
    pub const DEFAULT_KERNEL: usize = 5;

    /// Weights uniform in ±0.1, zero bias.
    pub fn new<R: Rng + ?Sized>(kernel: usize, rng: &mut R) -> Result<Self> {
        let mut conv = Conv1d::same(1, 1, kernel, rng)?;
        conv.w = Param::uniform(&[1, 1, kernel], 0.1, rng);
        Ok(Self { conv })
    }

    /// Builds a refiner from explicit kernel weights and bias.
    pub fn from_kernel(weights: &[f64], bias: f64) -> Result<Self> {
        let k = weights.len();
        if k % 2 == 0 {
            return Err(Error::config(format!("refinement kernel must be odd, got {k}")));
        }
        let mut conv = Conv1d::new(1, 1, k, 1, k / 2, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0));
        conv.w.value.data.copy_from_slice(weights);
        conv.b.value.data[0] = bias;
        Ok(Self { conv })
    }

    pub fn refine(&self, raw: &[f64]) -> Vec<f64> {
        sigmoid(&self.conv.forward(raw, raw.len()))
    }

    /// Accumulates kernel gradients and returns the gradient for `raw`.
    pub fn backward(&mut self, raw: &[f64], refined: &[f64], drefined: &[f64]) -> Vec<f64> {
        let dpre = sigmoid_backward(refined, drefined);
        self.conv.backward(raw, raw.len(), &dpre)
    }

    /// Raw and refined weights for a signal.
    pub fn weights(&self, x: &[f64]) -> Result<AttentionWeights> {
        let raw_alpha = raw_attention(x)?;
        let refined_alpha = self.refine(&raw_alpha);
        Ok(AttentionWeights { raw_alpha, refined_alpha })
    }
}

/// Scales row `t` of `features: [T, d]` by `alpha[t]`.
pub fn apply(features: &[f64], alpha: &[f64], d: usize) -> Result<Vec<f64>> {
    if d == 0 || features.len() != alpha.len() * d {
        return Err(Error::contract(format!(
            "features hold {} values, expected {} rows of width {d}",
            features.len(),
            alpha.len()
        )));
    }
    Ok(features
        .chunks(d)
        .zip(alpha)
        .flat_map(|(row, a)| row.iter().map(move |v| v * a))
        .collect())
}

/// Returns `(dfeatures, dalpha)`.
pub fn apply_backward(features: &[f64], alpha: &[f64], d: usize, dy: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut dfeat = vec![0.0; features.len()];
    let mut dalpha = vec![0.0; alpha.len()];
    for t in 0..alpha.len() {
        let row = t * d..(t + 1) * d;
        for i in row.clone() {
            dfeat[i] = dy[i] * alpha[t];
        }
        dalpha[t] = crate::nn::dot(&features[row.clone()], &dy[row]);
    }
    (dfeat, dalpha)
}

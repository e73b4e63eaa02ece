//! Two-stream detector: a GC stream scores peak presence per retention
//! position, an MS stream identifies solutes from the mass scans.

mod model;
mod train;

pub use model::{Detector, GcCache, MsCache, DETECTOR_KIND};
pub use train::{
    evaluate, train_detector, DetectorOutcome, DetectorSample, DetectorTrainConfig, EpochMetrics,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MultiHot;
use crate::nn::{dot, sigmoid_scalar, softmax_rows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub gc_kernel: usize,
    pub gc_padding: usize,
    /// Width of the GC-stream encoder.
    pub gc_dim: usize,
    pub gc_ffn_dim: usize,
    pub ms_kernels: (usize, usize),
    pub ms_channels: (usize, usize),
    /// Width of the MS-stream encoder.
    pub encoder_dim: usize,
    pub heads: usize,
    pub layers: usize,
    pub ffn_dim: usize,
    pub classes: usize,
    pub mz_bins: usize,
    pub refine_kernel: usize,
    /// Suppress every decision when no position reaches presence 0.5.
    pub gate: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            gc_kernel: 7,
            gc_padding: 3,
            gc_dim: 128,
            gc_ffn_dim: 256,
            ms_kernels: (7, 5),
            ms_channels: (8, 16),
            encoder_dim: 128,
            heads: 4,
            layers: 2,
            ffn_dim: 256,
            classes: 6,
            mz_bins: crate::simulator::MZ_BINS,
            refine_kernel: 5,
            gate: true,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes != 6 {
            return Err(Error::config("the detector has exactly 6 solute classes"));
        }
        if self.gc_kernel == 0 || 2 * self.gc_padding + 1 != self.gc_kernel {
            return Err(Error::config(format!(
                "GC conv kernel {} with padding {} does not preserve length",
                self.gc_kernel, self.gc_padding
            )));
        }
        for (name, dim) in [("gc_dim", self.gc_dim), ("encoder_dim", self.encoder_dim)] {
            if self.heads == 0 || dim == 0 || dim % self.heads != 0 {
                return Err(Error::config(format!("{name} {dim} is not divisible by {} heads", self.heads)));
            }
        }
        let (k1, k2) = self.ms_kernels;
        if k1 % 2 == 0 || k2 % 2 == 0 {
            return Err(Error::config("MS conv kernels must be odd"));
        }
        if self.ms_channels.0 == 0 || self.ms_channels.1 == 0 || self.gc_ffn_dim == 0 || self.ffn_dim == 0 {
            return Err(Error::config("layer widths must be positive"));
        }
        if self.mz_bins < k1.max(k2) {
            return Err(Error::config(format!("{} m/z bins is shorter than the MS kernels", self.mz_bins)));
        }
        if self.refine_kernel % 2 == 0 {
            return Err(Error::config("refinement kernel must be odd"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub peak_presence: Vec<f64>,
    /// Softmax posterior over the six solutes, by [`crate::spectrum::Solute::index`].
    pub solute_posteriors: Vec<f64>,
    pub decided_solutes: MultiHot,
}

/// `f = Σ_t w_t h_t` with `w = softmax(refined_alpha)`; `h` is `[T, d]`.
pub fn peak_aware_pool(h: &[f64], refined_alpha: &[f64]) -> Result<Vec<f64>> {
    let t = refined_alpha.len();
    if t == 0 || h.len() % t != 0 {
        return Err(Error::contract(format!(
            "{} features cannot be split over {t} positions",
            h.len()
        )));
    }
    let w = softmax_rows(refined_alpha, t);
    Ok(pool_weighted(h, &w))
}

pub(crate) fn pool_weighted(h: &[f64], w: &[f64]) -> Vec<f64> {
    let d = h.len() / w.len();
    let mut f = vec![0.0; d];
    for (row, wt) in h.chunks(d).zip(w) {
        for (o, v) in f.iter_mut().zip(row) {
            *o += wt * v;
        }
    }
    f
}

/// Logits `W f + b` for `W: [classes, d]`.
pub fn logits(f: &[f64], w: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if b.is_empty() || w.len() != b.len() * f.len() {
        return Err(Error::contract(format!(
            "weights of length {} do not fit {} features and {} classes",
            w.len(),
            f.len(),
            b.len()
        )));
    }
    Ok(w.chunks(f.len()).zip(b).map(|(row, bi)| dot(row, f) + bi).collect())
}

/// Softmax posterior `softmax(W f + b)`.
pub fn classify(f: &[f64], w: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let z = logits(f, w, b)?;
    Ok(softmax_rows(&z, z.len()))
}

/// Per-class sigmoid thresholded at 0.5.
pub fn decide(logits: &[f64]) -> MultiHot {
    let mut m = [false; 6];
    for (o, z) in m.iter_mut().zip(logits) {
        *o = sigmoid_scalar(*z) > 0.5;
    }
    m
}

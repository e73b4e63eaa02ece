use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Detector, DetectorConfig};
use crate::error::{Error, Result};
use crate::metrics::{detection_scores, multi_hot, DetectionScores, MultiHot};
use crate::nn::{sigmoid_scalar, softplus, Adam, AdamSettings};
use crate::simulator::{peak_mask, SimulatedRecord};
use crate::spectrum::{detect_peaks, PeakOptions, Spectrum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorTrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
    /// Records per epoch that also train the GC stream; `None` uses all of them.
    pub gc_records_per_epoch: Option<usize>,
    /// Weight peak positions by the negative/positive ratio of each record.
    pub gc_balance: bool,
}

impl Default for DetectorTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch: 16,
            lr: 1e-3,
            seed: 0,
            gc_records_per_epoch: None,
            gc_balance: true,
        }
    }
}

impl DetectorTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch == 0 {
            return Err(Error::config("epochs and batch must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config(format!("learning rate {} is not positive", self.lr)));
        }
        Ok(())
    }
}

/// A spectrum with its per-position peak target and solute multi-hot.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSample {
    pub spectrum: Spectrum,
    pub mask: Vec<f64>,
    pub labels: MultiHot,
}

impl DetectorSample {
    pub fn from_simulated(record: &SimulatedRecord) -> Self {
        Self {
            labels: multi_hot(record.label().solutes()),
            mask: record.truth.mask.clone(),
            spectrum: record.spectrum.clone(),
        }
    }

    /// Uses detected peaks as the presence target when no ground truth exists.
    pub fn from_spectrum(spectrum: &Spectrum) -> Result<Self> {
        let label = spectrum
            .condition
            .as_ref()
            .ok_or_else(|| Error::data("spectrum has no condition label"))?;
        let found = detect_peaks(&spectrum.tic, &PeakOptions::for_length(spectrum.tic.len()));
        let idx: Vec<usize> = found.peaks.iter().map(|p| p.index).collect();
        Ok(Self {
            labels: multi_hot(label.solutes()),
            mask: peak_mask(&idx, spectrum.tic.len()),
            spectrum: spectrum.clone(),
        })
    }

    fn check(&self, i: usize) -> Result<()> {
        self.spectrum
            .validate()
            .map_err(|e| Error::data(format!("record {i}: {e}")))?;
        if self.mask.len() != self.spectrum.tic.len() {
            return Err(Error::data(format!(
                "record {i}: mask has {} positions, spectrum {}",
                self.mask.len(),
                self.spectrum.tic.len()
            )));
        }
        if let Some(label) = &self.spectrum.condition {
            if multi_hot(label.solutes()) != self.labels {
                return Err(Error::data(format!("record {i}: labels disagree with its condition")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub gc_loss: f64,
    pub ms_loss: f64,
    pub loss: f64,
    pub scores: DetectionScores,
}

#[derive(Debug, Clone)]
pub struct DetectorOutcome {
    pub model: Detector,
    pub history: Vec<EpochMetrics>,
}

/// Per-position BCE on logits; returns the loss and its logit gradient scaled by `scale`.
fn gc_bce(logits: &[f64], mask: &[f64], balance: bool, scale: f64) -> (f64, Vec<f64>) {
    let pos = mask.iter().filter(|m| **m > 0.5).count();
    let neg = mask.len() - pos;
    let pos_w = if balance && pos > 0 { neg.max(1) as f64 / pos as f64 } else { 1.0 };
    let weights: Vec<f64> = mask.iter().map(|m| if *m > 0.5 { pos_w } else { 1.0 }).collect();
    let total: f64 = weights.iter().sum();
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for ((z, y), w) in logits.iter().zip(mask).zip(&weights) {
        loss += w * (softplus(*z) - y * z);
        grad.push(scale * w * (sigmoid_scalar(*z) - y) / total);
    }
    (loss / total, grad)
}

/// Multi-label BCE averaged over classes.
fn ms_bce(logits: &[f64], labels: &MultiHot, scale: f64) -> (f64, Vec<f64>) {
    let k = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (z, y) in logits.iter().zip(labels) {
        let y = if *y { 1.0 } else { 0.0 };
        loss += softplus(*z) - y * z;
        grad.push(scale * (sigmoid_scalar(*z) - y) / k);
    }
    (loss / k, grad)
}

/// Exact-set accuracy and per-solute scores of gated decisions.
pub fn evaluate(model: &Detector, samples: &[DetectorSample]) -> Result<DetectionScores> {
    let mut preds = Vec::with_capacity(samples.len());
    for s in samples {
        preds.push(model.detect(&s.spectrum)?.decided_solutes);
    }
    let labels: Vec<MultiHot> = samples.iter().map(|s| s.labels).collect();
    detection_scores(&preds, &labels)
}

/// Mini-batch Adam on the summed GC and MS losses.
///
/// Scores for each epoch are measured on `eval` when given, else on the
/// training set.
pub fn train_detector(
    train: &[DetectorSample],
    eval: Option<&[DetectorSample]>,
    config: &DetectorConfig,
    tc: &DetectorTrainConfig,
) -> Result<DetectorOutcome> {
    tc.validate()?;
    if train.is_empty() {
        return Err(Error::data("detector training needs at least one record"));
    }
    for (i, s) in train.iter().enumerate() {
        s.check(i)?;
    }
    let mut model = Detector::new(config.clone(), tc.seed)?;
    let mut opt = Adam::new(AdamSettings::with_lr(tc.lr));
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    rng.set_stream(4);
    let gc_quota = tc.gc_records_per_epoch.unwrap_or(train.len()).min(train.len());
    let mut history = Vec::with_capacity(tc.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=tc.epochs {
        order.shuffle(&mut rng);
        let (mut gc_sum, mut gc_n, mut ms_sum, mut ms_n) = (0.0, 0usize, 0.0, 0usize);
        for (b, chunk) in order.chunks(tc.batch).enumerate() {
            let scale = 1.0 / chunk.len() as f64;
            for (j, &i) in chunk.iter().enumerate() {
                let s = &train[i];
                if b * tc.batch + j < gc_quota {
                    let gc = model.gc_forward(&s.spectrum.tic)?;
                    let (l, g) = gc_bce(gc.logits(), &s.mask, tc.gc_balance, scale);
                    model.gc_backward(&gc, &g);
                    gc_sum += l;
                    gc_n += 1;
                }
                if !s.spectrum.scans.is_empty() {
                    let ms = model.ms_forward(&s.spectrum)?;
                    let (l, g) = ms_bce(ms.logits(), &s.labels, scale);
                    model.ms_backward(&ms, &g);
                    ms_sum += l;
                    ms_n += 1;
                }
            }
            opt.step(&mut model)?;
        }
        let gc_loss = gc_sum / gc_n.max(1) as f64;
        let ms_loss = ms_sum / ms_n.max(1) as f64;
        if !(gc_loss.is_finite() && ms_loss.is_finite()) {
            return Err(Error::Data(format!("detector training diverged in epoch {epoch}")));
        }
        history.push(EpochMetrics {
            epoch,
            gc_loss,
            ms_loss,
            loss: gc_loss + ms_loss,
            scores: evaluate(&model, eval.unwrap_or(train))?,
        });
    }
    Ok(DetectorOutcome { model, history })
}

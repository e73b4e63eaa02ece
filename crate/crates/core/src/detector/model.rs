use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{decide, pool_weighted, DetectionResult, DetectorConfig};
use crate::error::{Error, Result};
use crate::nn::{
    add_into, relu, relu_backward, sigmoid, sinusoidal_positions, softmax_backward, softmax_rows, transpose,
    Checkpoint, Conv1d, EncoderCache, Linear, TransformerEncoder,
};
use crate::peak_attention::{raw_attention, PeakRefiner};
use crate::spectrum::Spectrum;

pub const DETECTOR_KIND: &str = "detector";

#[derive(Debug, Clone)]
pub struct Detector {
    pub config: DetectorConfig,
    pub gc_conv: Conv1d,
    pub gc_encoder: TransformerEncoder,
    pub gc_head: Linear,
    pub ms_conv1: Conv1d,
    pub ms_conv2: Conv1d,
    pub ms_proj: Linear,
    pub ms_encoder: TransformerEncoder,
    pub refiner: PeakRefiner,
    pub head: Linear,
}

crate::impl_parameterized!(Detector {
    gc_conv,
    gc_encoder,
    gc_head,
    ms_conv1,
    ms_conv2,
    ms_proj,
    ms_encoder,
    refiner,
    head
});

#[derive(Debug, Clone)]
pub struct GcCache {
    x: Vec<f64>,
    encoder: EncoderCache,
    encoded: Vec<f64>,
    logits: Vec<f64>,
    presence: Vec<f64>,
}

impl GcCache {
    pub fn presence(&self) -> &[f64] {
        &self.presence
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }
}

#[derive(Debug, Clone)]
struct ScanCache {
    x: Vec<f64>,
    pre1: Vec<f64>,
    a1: Vec<f64>,
    pre2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MsCache {
    scans: Vec<ScanCache>,
    positions: Vec<usize>,
    flat: Vec<f64>,
    encoder: EncoderCache,
    h: Vec<f64>,
    raw: Vec<f64>,
    refined: Vec<f64>,
    weights: Vec<f64>,
    pooled: Vec<f64>,
    logits: Vec<f64>,
}

impl MsCache {
    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    /// Softmax-normalized pooling weight of each scan.
    pub fn pool_weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Detector {
    pub fn new(config: DetectorConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(3);
        Self::with_rng(config, &mut rng)
    }

    pub fn with_rng<R: Rng + ?Sized>(config: DetectorConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let c = &config;
        let (k1, k2) = c.ms_kernels;
        let (c1, c2) = c.ms_channels;
        let ms_conv1 = Conv1d::new(1, c1, k1, 2, k1 / 2, rng);
        let ms_conv2 = Conv1d::new(c1, c2, k2, 2, k2 / 2, rng);
        let flat = c2 * ms_conv2.output_len(ms_conv1.output_len(c.mz_bins));
        Ok(Self {
            gc_conv: Conv1d::new(1, c.gc_dim, c.gc_kernel, 1, c.gc_padding, rng),
            gc_encoder: TransformerEncoder::new(c.gc_dim, c.heads, c.gc_ffn_dim, c.layers, rng)?,
            gc_head: Linear::new(c.gc_dim, 1, rng),
            ms_proj: Linear::new(flat, c.encoder_dim, rng),
            ms_encoder: TransformerEncoder::new(c.encoder_dim, c.heads, c.ffn_dim, c.layers, rng)?,
            refiner: PeakRefiner::new(c.refine_kernel, rng)?,
            head: Linear::new(c.encoder_dim, c.classes, rng),
            ms_conv1,
            ms_conv2,
            config,
        })
    }

    /// Peak-presence probability for each retention position.
    pub fn gc_forward(&self, tic: &[f64]) -> Result<GcCache> {
        let t = tic.len();
        if t == 0 {
            return Err(Error::contract("GC stream needs a non-empty chromatogram"));
        }
        let d = self.config.gc_dim;
        let conv = self.gc_conv.forward(tic, t);
        let mut tokens = transpose(&conv, d, t);
        add_into(&mut tokens, &sinusoidal_positions(t, d));
        let (encoded, encoder) = self.gc_encoder.forward(&tokens, t);
        let logits = self.gc_head.forward(&encoded, t);
        let presence = sigmoid(&logits);
        Ok(GcCache {
            x: tic.to_vec(),
            encoder,
            encoded,
            logits,
            presence,
        })
    }

    /// `dlogits` is the gradient with respect to the pre-sigmoid presence logits.
    pub fn gc_backward(&mut self, cache: &GcCache, dlogits: &[f64]) {
        let (t, d) = (cache.x.len(), self.config.gc_dim);
        let denc = self.gc_head.backward(&cache.encoded, t, dlogits);
        let dtokens = self.gc_encoder.backward(&cache.encoder, &denc);
        self.gc_conv.backward(&cache.x, t, &transpose(&dtokens, t, d));
    }

    /// Solute logits from the mass scans, pooled with peak-aware weights over the chromatogram.
    pub fn ms_forward(&self, spectrum: &Spectrum) -> Result<MsCache> {
        let scans = &spectrum.scans;
        if scans.is_empty() {
            return Err(Error::contract("MS stream needs at least one scan"));
        }
        let c = &self.config;
        let t = spectrum.tic.len();
        let mut caches = Vec::with_capacity(scans.len());
        let mut flat = Vec::new();
        for scan in scans {
            if scan.mz.len() != c.mz_bins {
                return Err(Error::contract(format!(
                    "scan has {} m/z bins, expected {}",
                    scan.mz.len(),
                    c.mz_bins
                )));
            }
            if scan.t >= t {
                return Err(Error::contract(format!("scan at {} lies outside {t} positions", scan.t)));
            }
            let pre1 = self.ms_conv1.forward(&scan.mz, c.mz_bins);
            let a1 = relu(&pre1);
            let pre2 = self.ms_conv2.forward(&a1, self.ms_conv1.output_len(c.mz_bins));
            flat.extend(relu(&pre2));
            caches.push(ScanCache {
                x: scan.mz.clone(),
                pre1,
                a1,
                pre2,
            });
        }
        let s = scans.len();
        let tokens = self.ms_proj.forward(&flat, s);
        let (h, encoder) = self.ms_encoder.forward(&tokens, s);
        let raw = raw_attention(&spectrum.tic)?;
        let refined = self.refiner.refine(&raw);
        let positions: Vec<usize> = scans.iter().map(|sc| sc.t).collect();
        let gathered: Vec<f64> = positions.iter().map(|&p| refined[p]).collect();
        let weights = softmax_rows(&gathered, s);
        let pooled = pool_weighted(&h, &weights);
        let logits = self.head.forward(&pooled, 1);
        Ok(MsCache {
            scans: caches,
            positions,
            flat,
            encoder,
            h,
            raw,
            refined,
            weights,
            pooled,
            logits,
        })
    }

    pub fn ms_backward(&mut self, cache: &MsCache, dlogits: &[f64]) {
        let (mz_bins, d) = (self.config.mz_bins, self.config.encoder_dim);
        let s = cache.positions.len();
        let dpooled = self.head.backward(&cache.pooled, 1, dlogits);
        let mut dh = vec![0.0; s * d];
        let mut dw = vec![0.0; s];
        for i in 0..s {
            let row = &cache.h[i * d..(i + 1) * d];
            dw[i] = crate::nn::dot(row, &dpooled);
            for (g, v) in dh[i * d..(i + 1) * d].iter_mut().zip(&dpooled) {
                *g = cache.weights[i] * v;
            }
        }
        let dgathered = softmax_backward(&cache.weights, &dw, s);
        let mut drefined = vec![0.0; cache.refined.len()];
        for (&p, g) in cache.positions.iter().zip(&dgathered) {
            drefined[p] += g;
        }
        self.refiner.backward(&cache.raw, &cache.refined, &drefined);

        let dtokens = self.ms_encoder.backward(&cache.encoder, &dh);
        let dflat = self.ms_proj.backward(&cache.flat, s, &dtokens);
        let t1 = self.ms_conv1.output_len(mz_bins);
        let width = dflat.len() / s;
        for (sc, g) in cache.scans.iter().zip(dflat.chunks(width)) {
            let da2 = relu_backward(&sc.pre2, g);
            let da1 = self.ms_conv2.backward(&sc.a1, t1, &da2);
            let dpre1 = relu_backward(&sc.pre1, &da1);
            self.ms_conv1.backward(&sc.x, mz_bins, &dpre1);
        }
    }

    pub fn detect(&self, spectrum: &Spectrum) -> Result<DetectionResult> {
        let peak_presence = self.gc_forward(&spectrum.tic)?.presence;
        if spectrum.scans.is_empty() {
            return Ok(DetectionResult {
                peak_presence,
                solute_posteriors: vec![1.0 / self.config.classes as f64; self.config.classes],
                decided_solutes: [false; 6],
            });
        }
        let logits = self.ms_forward(spectrum)?.logits;
        let evidence = peak_presence.iter().any(|p| *p >= 0.5);
        let decided_solutes = if self.config.gate && !evidence { [false; 6] } else { decide(&logits) };
        Ok(DetectionResult {
            peak_presence,
            solute_posteriors: softmax_rows(&logits, logits.len()),
            decided_solutes,
        })
    }

    pub fn checkpoint(&self) -> Result<Checkpoint> {
        Ok(Checkpoint::capture(DETECTOR_KIND, serde_json::to_value(&self.config)?, self))
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind(DETECTOR_KIND)?;
        let config: DetectorConfig = serde_json::from_value(ck.config.clone())?;
        let mut model = Self::new(config, 0)?;
        ck.restore(&mut model)?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.checkpoint()?.save(path)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::nn::{grad_check_params, Parameterized};
    use crate::spectrum::Scan;

    pub(crate) fn tiny() -> DetectorConfig {
        DetectorConfig {
            gc_dim: 4,
            gc_ffn_dim: 6,
            ms_channels: (2, 3),
            encoder_dim: 4,
            heads: 2,
            layers: 2,
            ffn_dim: 6,
            mz_bins: 16,
            ..DetectorConfig::default()
        }
    }

    fn spectrum(rng: &mut ChaCha8Rng, t: usize, scans: &[usize]) -> Spectrum {
        let tic: Vec<f64> = (0..t).map(|_| rng.random_range(0.0..1.0)).collect();
        Spectrum {
            scans: scans
                .iter()
                .map(|&i| Scan {
                    t: i,
                    mz: (0..16).map(|_| rng.random_range(0.0..1.0)).collect(),
                })
                .collect(),
            tic,
            t_minutes: None,
            condition: None,
        }
    }

    #[test]
    fn shapes_and_contracts() {
        let det = Detector::new(tiny(), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = spectrum(&mut rng, 20, &[3, 9, 15]);
        let gc = det.gc_forward(&s.tic).unwrap();
        assert_eq!(gc.presence().len(), 20);
        assert!(gc.presence().iter().all(|p| *p > 0.0 && *p < 1.0));
        let ms = det.ms_forward(&s).unwrap();
        assert_eq!(ms.logits().len(), 6);
        assert!((ms.pool_weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(ms.logits(), det.ms_forward(&s).unwrap().logits());

        let mut empty = s.clone();
        empty.scans.clear();
        assert!(matches!(det.ms_forward(&empty), Err(Error::Contract(_))));
        let r = det.detect(&empty).unwrap();
        assert_eq!(r.decided_solutes, [false; 6]);
        assert!(r.solute_posteriors.iter().all(|p| (p - 1.0 / 6.0).abs() < 1e-15));

        let mut outside = s.clone();
        outside.scans[0].t = 20;
        assert!(matches!(det.ms_forward(&outside), Err(Error::Contract(_))));
        let mut narrow = s;
        narrow.scans[1].mz.pop();
        assert!(matches!(det.ms_forward(&narrow), Err(Error::Contract(_))));
    }

    #[test]
    fn gate_suppresses_decisions_without_presence() {
        let mut det = Detector::new(tiny(), 2).unwrap();
        det.gc_head.b.value.data[0] = -50.0;
        det.head.b.value.data.iter_mut().for_each(|b| *b = 50.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = spectrum(&mut rng, 16, &[4, 8]);
        let r = det.detect(&s).unwrap();
        assert_eq!(r.decided_solutes, [false; 6]);
        assert!((r.solute_posteriors.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        det.config.gate = false;
        assert_eq!(det.detect(&s).unwrap().decided_solutes, [true; 6]);
    }

    #[test]
    fn gc_stream_gradients() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut det = Detector::with_rng(tiny(), &mut rng).unwrap();
            let s = spectrum(&mut rng, 12, &[2]);
            let up: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            let logit = |p: f64| (p / (1.0 - p)).ln();
            let loss = |d: &Detector| -> f64 {
                let c = d.gc_forward(&s.tic).unwrap();
                c.presence().iter().zip(&up).map(|(p, u)| logit(*p) * u).sum()
            };
            let rep = grad_check_params(&mut det, 1e-5, 60, seed, &mut |d| loss(d), &mut |d| {
                d.zero_grad();
                let c = d.gc_forward(&s.tic).unwrap();
                d.gc_backward(&c, &up);
            });
            assert!(rep.max_rel_err < 1e-3, "seed {seed}: {rep:?}");
        }
    }

    #[test]
    fn ms_stream_gradients() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut det = Detector::with_rng(tiny(), &mut rng).unwrap();
            det.refiner.conv.w = crate::nn::Param::uniform(&[1, 1, 5], 2.0, &mut rng);
            let s = spectrum(&mut rng, 14, &[1, 5, 5, 11]);
            let up: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let loss = |d: &Detector| -> f64 { crate::nn::dot(d.ms_forward(&s).unwrap().logits(), &up) };
            let rep = grad_check_params(&mut det, 1e-5, 80, seed, &mut |d| loss(d), &mut |d| {
                d.zero_grad();
                let c = d.ms_forward(&s).unwrap();
                d.ms_backward(&c, &up);
            });
            assert!(rep.max_rel_err < 1e-3, "seed {seed}: {rep:?}");
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let det = Detector::new(tiny(), 4).unwrap();
        let path = dir.path().join("det.json");
        det.save(&path).unwrap();
        let back = Detector::load(&path).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = spectrum(&mut rng, 10, &[4]);
        assert_eq!(det.detect(&s).unwrap(), back.detect(&s).unwrap());
    }
}

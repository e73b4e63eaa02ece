use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{discriminator_loss, discriminator_loss_grads, generator_loss, CganConfig, Discriminator, Generator, Stft};
use crate::error::{Error, Result};
use crate::nn::{add_into, Adam, AdamSettings, Checkpoint, Parameterized};
use crate::simulator::{retention_axis, synthesize_scans};
use crate::spectrum::{ConditionLabel, Spectrum};

pub const CGAN_KIND: &str = "cgan";

/// Generator and discriminator trained together.
#[derive(Debug, Clone)]
pub struct Cgan {
    pub config: CganConfig,
    pub generator: Generator,
    pub discriminator: Discriminator,
}

crate::impl_parameterized!(Cgan { generator, discriminator });

impl Cgan {
    pub fn new(config: CganConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let generator = Generator::new(config.generator.clone(), &mut rng)?;
        let discriminator = Discriminator::new(config.discriminator.clone(), config.generator.output_dim, &mut rng)?;
        Ok(Self {
            config,
            generator,
            discriminator,
        })
    }

    pub fn checkpoint(&self) -> Result<Checkpoint> {
        Ok(Checkpoint::capture(CGAN_KIND, serde_json::to_value(&self.config)?, self))
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind(CGAN_KIND)?;
        let config: CganConfig = serde_json::from_value(ck.config.clone())?;
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

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub iteration: usize,
    pub g_adv: f64,
    pub g_stft: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossHistory {
    pub records: Vec<LossRecord>,
}

impl LossHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,L_G_adv,L_G_stft,L_D\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{},{}\n", r.iteration, r.g_adv, r.g_stft, r.d));
        }
        out
    }

    /// Mean spectral term over the first and last `fraction` of iterations.
    pub fn spectral_trend(&self, fraction: f64) -> Option<(f64, f64)> {
        let n = self.records.len();
        let k = ((n as f64 * fraction).ceil() as usize).max(1);
        if n < 2 * k {
            return None;
        }
        let mean = |rs: &[LossRecord]| rs.iter().map(|r| r.g_stft).sum::<f64>() / rs.len() as f64;
        Some((mean(&self.records[..k]), mean(&self.records[n - k..])))
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Cgan,
    pub history: LossHistory,
}

fn validate_dataset(dataset: &[Spectrum], len: usize) -> Result<Vec<(&[f64], &ConditionLabel)>> {
    if dataset.is_empty() {
        return Err(Error::config("training needs at least one spectrum"));
    }
    dataset
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let label = s
                .condition
                .as_ref()
                .ok_or_else(|| Error::data(format!("spectrum {i} has no condition label")))?;
            if s.tic.len() != len {
                return Err(Error::data(format!("spectrum {i} has {} samples, expected {len}", s.tic.len())));
            }
            if s.tic.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::data(format!("spectrum {i} is not normalized to [0, 1]")));
            }
            Ok((s.tic.as_slice(), label))
        })
        .collect()
}

/// Alternating discriminator and generator updates.
///
/// Each batch pairs every real spectrum with a generated one of the same
/// condition. Checkpoints go to `checkpoint_dir` when an interval is set.
pub fn train_cgan(dataset: &[Spectrum], config: &CganConfig, checkpoint_dir: Option<&Path>) -> Result<TrainOutcome> {
    let tc = config.train.clone();
    let data = validate_dataset(dataset, config.generator.output_dim)?;
    let mut model = Cgan::new(config.clone(), tc.seed)?;
    let stft = Stft::new(tc.stft_window, tc.stft_hop)?;
    let mut opt_g = Adam::new(AdamSettings::with_lr(tc.lr_g));
    let mut opt_d = Adam::new(AdamSettings::with_lr(tc.lr_d));
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    rng.set_stream(2);
    let mut history = LossHistory::default();

    for it in 0..tc.iterations {
        let picks: Vec<usize> = (0..tc.batch).map(|_| rng.random_range(0..data.len())).collect();
        let mut gen_caches = Vec::with_capacity(picks.len());
        for &i in &picks {
            let z = model.generator.sample_noise(&mut rng);
            gen_caches.push(model.generator.forward(data[i].1, &z, true, &mut rng));
        }

        let disc = &mut model.discriminator;
        let mut real_scores = Vec::with_capacity(picks.len());
        let mut fake_scores = Vec::with_capacity(picks.len());
        let mut real_caches = Vec::with_capacity(picks.len());
        let mut fake_caches = Vec::with_capacity(picks.len());
        for (&i, gc) in picks.iter().zip(&gen_caches) {
            let (sr, cr) = disc.forward(data[i].0, data[i].1)?;
            let (sf, cf) = disc.forward(gc.output(), data[i].1)?;
            real_scores.push(sr);
            fake_scores.push(sf);
            real_caches.push(cr);
            fake_caches.push(cf);
        }
        let l_d = discriminator_loss(&real_scores, &fake_scores);
        let (gr, gf) = discriminator_loss_grads(&real_scores, &fake_scores);
        for k in 0..picks.len() {
            disc.backward(&real_caches[k], gr[k]);
            disc.backward(&fake_caches[k], gf[k]);
        }
        opt_d.step(disc)?;

        let mut scores = Vec::with_capacity(picks.len());
        let mut caches = Vec::with_capacity(picks.len());
        for (&i, gc) in picks.iter().zip(&gen_caches) {
            let (s, c) = disc.forward(gc.output(), data[i].1)?;
            scores.push(s);
            caches.push(c);
        }
        let reals: Vec<Vec<f64>> = picks.iter().map(|&i| data[i].0.to_vec()).collect();
        let fakes: Vec<Vec<f64>> = gen_caches.iter().map(|c| c.output().to_vec()).collect();
        let gl = generator_loss(&scores, &reals, &fakes, tc.lambda, &stft)?;
        for k in 0..picks.len() {
            let mut dx = disc.backward(&caches[k], gl.d_scores[k]);
            add_into(&mut dx, &gl.d_generated[k]);
            model.generator.backward(&gen_caches[k], &dx);
        }
        disc.zero_grad();
        opt_g.step(&mut model.generator)?;

        history.records.push(LossRecord {
            iteration: it + 1,
            g_adv: gl.adversarial,
            g_stft: gl.spectral,
            d: l_d,
        });
        if !(gl.total.is_finite() && l_d.is_finite()) {
            return Err(Error::Data(format!("training diverged at iteration {}", it + 1)));
        }
        if let Some(dir) = checkpoint_dir {
            if tc.checkpoint_every > 0 && (it + 1) % tc.checkpoint_every == 0 {
                model.save(&dir.join(format!("checkpoint_{:06}.json", it + 1)))?;
            }
        }
    }
    Ok(TrainOutcome { model, history })
}

/// `n` inference-mode spectra for one condition, each with a fresh noise draw.
///
/// Mass scans come from the fragment templates at the detected peaks.
pub fn generate(generator: &Generator, label: &ConditionLabel, n: usize, seed: u64) -> Vec<Spectrum> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let tic = generator.generate_one(label, &mut rng);
            Spectrum {
                scans: synthesize_scans(&tic, label),
                t_minutes: Some(retention_axis(tic.len())),
                condition: Some(label.clone()),
                tic,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgan::{DiscriminatorConfig, GeneratorConfig, TrainConfig};
    use crate::simulator::{make_dataset, InterferenceModel};

    pub(crate) fn tiny_config() -> CganConfig {
        CganConfig {
            generator: GeneratorConfig {
                embed_dim: 8,
                noise_dim: 4,
                hidden_dim: 8,
                depth: 3,
                output_dim: 64,
                heads: 2,
                dropout_p: 0.1,
                seq_len: 4,
                ..GeneratorConfig::default()
            },
            discriminator: DiscriminatorConfig {
                channels: (2, 4),
                heads: 2,
                embed_dim: 2,
                hidden_dim: 4,
            },
            train: TrainConfig {
                iterations: 3,
                batch: 2,
                stft_window: 16,
                stft_hop: 8,
                ..TrainConfig::default()
            },
        }
    }

    fn data() -> Vec<Spectrum> {
        let conds = &ConditionLabel::evaluation_conditions()[..2];
        make_dataset(2, conds, &InterferenceModel::default(), 64, 0)
            .unwrap()
            .into_iter()
            .map(|r| r.spectrum)
            .collect()
    }

    #[test]
    fn smoke_and_determinism() {
        let cfg = tiny_config();
        let a = train_cgan(&data()[..1], &cfg, None).unwrap();
        assert_eq!(a.history.records.len(), 3);
        assert!(a.history.records.iter().all(|r| r.g_adv.is_finite() && r.g_stft.is_finite() && r.d.is_finite()));
        let b = train_cgan(&data()[..1], &cfg, None).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.model.checkpoint().unwrap(), b.model.checkpoint().unwrap());
    }

    #[test]
    fn empty_and_mismatched_data_rejected() {
        let cfg = tiny_config();
        assert!(matches!(train_cgan(&[], &cfg, None), Err(Error::Config(_))));
        let mut d = data();
        d[0].tic.push(0.0);
        assert!(matches!(train_cgan(&d, &cfg, None), Err(Error::Data(_))));
    }

    #[test]
    fn checkpoints_round_trip() {
        let mut cfg = tiny_config();
        cfg.train.checkpoint_every = 2;
        let dir = tempfile::tempdir().unwrap();
        let out = train_cgan(&data(), &cfg, Some(dir.path())).unwrap();
        assert!(dir.path().join("checkpoint_000002.json").is_file());
        let path = dir.path().join("final.json");
        out.model.save(&path).unwrap();
        let back = Cgan::load(&path).unwrap();
        let label = data()[0].condition.clone().unwrap();
        assert_eq!(generate(&back.generator, &label, 2, 7), generate(&out.model.generator, &label, 2, 7));
    }

    #[test]
    fn generation_shapes() {
        let model = Cgan::new(tiny_config(), 1).unwrap();
        let label = data()[0].condition.clone().unwrap();
        assert!(generate(&model.generator, &label, 0, 0).is_empty());
        let out = generate(&model.generator, &label, 3, 0);
        assert_eq!(out.len(), 3);
        for s in &out {
            assert_eq!(s.tic.len(), 64);
            assert!(s.tic.iter().all(|v| *v > 0.0 && *v < 1.0));
            assert_eq!(s.condition.as_ref(), Some(&label));
            s.validate().unwrap();
        }
        assert_ne!(out[0].tic, out[1].tic);
    }

    #[test]
    fn refinement_kernel_receives_gradient() {
        let cfg = tiny_config();
        let mut model = Cgan::new(cfg.clone(), 0).unwrap();
        let d = data();
        let label = d[0].condition.clone().unwrap();
        let stft = Stft::new(16, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let z = model.generator.sample_noise(&mut rng);
        let c = model.generator.forward(&label, &z, false, &mut rng);
        let (s, dc) = model.discriminator.forward(c.output(), &label).unwrap();
        let gl = generator_loss(&[s], &[d[0].tic.clone()], &[c.output().to_vec()], 1.0, &stft).unwrap();
        let mut dx = model.discriminator.backward(&dc, gl.d_scores[0]);
        add_into(&mut dx, &gl.d_generated[0]);
        model.generator.backward(&c, &dx);
        assert!(model.generator.refine.conv.w.grad.iter().any(|g| *g != 0.0));
    }
}

use rand::Rng;

use super::{ConditionEmbedding, DiscriminatorConfig};
use crate::error::{Error, Result};
use crate::nn::{add_into, relu, relu_backward, sinusoidal_positions, transpose, Conv1d, Linear, MhaCache, MultiHeadAttention};
use crate::spectrum::ConditionLabel;

/// Two strided convolutions, self-attention over the downsampled sequence,
/// mean pooling, then a small dense head that also sees the condition.
#[derive(Debug, Clone)]
pub struct Discriminator {
    pub config: DiscriminatorConfig,
    pub input_len: usize,
    pub conv1: Conv1d,
    pub conv2: Conv1d,
    pub attend: MultiHeadAttention,
    pub embed: ConditionEmbedding,
    pub hidden: Linear,
    pub head: Linear,
    positions: Vec<f64>,
}

crate::impl_parameterized!(Discriminator {
    conv1,
    conv2,
    attend,
    embed,
    hidden,
    head
});

#[derive(Debug, Clone)]
pub struct DiscCache {
    label: ConditionLabel,
    x: Vec<f64>,
    pre1: Vec<f64>,
    a1: Vec<f64>,
    pre2: Vec<f64>,
    attend: MhaCache,
    joint: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    t1: usize,
    t2: usize,
}

impl Discriminator {
    pub fn new<R: Rng + ?Sized>(config: DiscriminatorConfig, input_len: usize, rng: &mut R) -> Result<Self> {
        config.validate(input_len)?;
        let (c1, c2) = config.channels;
        let conv1 = Conv1d::new(1, c1, 7, 2, 3, rng);
        let conv2 = Conv1d::new(c1, c2, 5, 2, 2, rng);
        let t2 = conv2.output_len(conv1.output_len(input_len));
        Ok(Self {
            attend: MultiHeadAttention::new(c2, config.heads, rng)?,
            embed: ConditionEmbedding::new(config.embed_dim, rng),
            hidden: Linear::new(c2 + 2 * config.embed_dim, config.hidden_dim, rng),
            head: Linear::new(config.hidden_dim, 1, rng),
            positions: sinusoidal_positions(t2, c2),
            conv1,
            conv2,
            config,
            input_len,
        })
    }

    pub fn forward(&self, x: &[f64], label: &ConditionLabel) -> Result<(f64, DiscCache)> {
        if x.len() != self.input_len {
            return Err(Error::contract(format!(
                "discriminator expects {} samples, got {}",
                self.input_len,
                x.len()
            )));
        }
        let c2 = self.config.channels.1;
        let t1 = self.conv1.output_len(self.input_len);
        let pre1 = self.conv1.forward(x, self.input_len);
        let a1 = relu(&pre1);
        let t2 = self.conv2.output_len(t1);
        let pre2 = self.conv2.forward(&a1, t1);
        let mut tokens = transpose(&relu(&pre2), c2, t2);
        add_into(&mut tokens, &self.positions);
        let (att, attend) = self.attend.forward_self(&tokens, t2);
        let mut joint = vec![0.0; c2];
        for row in att.chunks(c2) {
            add_into(&mut joint, row);
        }
        joint.iter_mut().for_each(|v| *v /= t2 as f64);
        joint.extend(self.embed.forward(label));
        let hidden_pre = self.hidden.forward(&joint, 1);
        let hidden = relu(&hidden_pre);
        let score = self.head.forward(&hidden, 1)[0];
        let cache = DiscCache {
            label: label.clone(),
            x: x.to_vec(),
            pre1,
            a1,
            pre2,
            attend,
            joint,
            hidden_pre,
            hidden,
            t1,
            t2,
        };
        Ok((score, cache))
    }

    pub fn score(&self, x: &[f64], label: &ConditionLabel) -> Result<f64> {
        Ok(self.forward(x, label)?.0)
    }

    /// Accumulates parameter gradients and returns `∂L/∂x`.
    pub fn backward(&mut self, cache: &DiscCache, dscore: f64) -> Vec<f64> {
        let c2 = self.config.channels.1;
        let (t1, t2) = (cache.t1, cache.t2);
        let dhidden = self.head.backward(&cache.hidden, 1, &[dscore]);
        let dpre = relu_backward(&cache.hidden_pre, &dhidden);
        let djoint = self.hidden.backward(&cache.joint, 1, &dpre);
        self.embed.backward(&cache.label, &djoint[c2..]);
        let dpool: Vec<f64> = djoint[..c2].iter().map(|g| g / t2 as f64).collect();
        let datt: Vec<f64> = dpool.repeat(t2);
        let dtokens = self.attend.backward_self(&cache.attend, &datt);
        let da2 = relu_backward(&cache.pre2, &transpose(&dtokens, t2, c2));
        let da1 = self.conv2.backward(&cache.a1, t1, &da2);
        let dpre1 = relu_backward(&cache.pre1, &da1);
        self.conv1.backward(&cache.x, self.input_len, &dpre1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, grad_check_params, Parameterized};
    use crate::spectrum::{Solute, Solvent};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn label() -> ConditionLabel {
        ConditionLabel::clean(Solvent::THF, &[Solute::Dmmp]).unwrap()
    }

    fn tiny() -> DiscriminatorConfig {
        DiscriminatorConfig {
            channels: (3, 4),
            heads: 2,
            embed_dim: 3,
            hidden_dim: 5,
        }
    }

    #[test]
    fn deterministic_and_finite() {
        let d = Discriminator::new(tiny(), 32, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let x: Vec<f64> = (0..32).map(|i| i as f64 / 31.0).collect();
        let a = d.score(&x, &label()).unwrap();
        assert!(a.is_finite());
        assert_eq!(a, d.score(&x, &label()).unwrap());
        assert!(matches!(d.score(&x[..31], &label()), Err(Error::Contract(_))));
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut d = Discriminator::new(tiny(), 32, &mut rng).unwrap();
            let x: Vec<f64> = (0..32).map(|_| rng.random_range(0.0..1.0)).collect();
            let rep = grad_check_params(&mut d, 1e-4, 80, seed, &mut |d| d.score(&x, &label()).unwrap(), &mut |d| {
                d.zero_grad();
                let (_, c) = d.forward(&x, &label()).unwrap();
                d.backward(&c, 1.0);
            });
            assert!(rep.max_rel_err < 1e-3, "seed {seed}: {rep:?}");
            let mut d2 = d.clone();
            let (_, c) = d2.forward(&x, &label()).unwrap();
            let dx = d2.backward(&c, 1.0);
            let rx = grad_check(&x, &dx, 1e-4, |xx| d.score(xx, &label()).unwrap());
            assert!(rx.max_rel_err < 1e-3, "seed {seed}: {rx:?}");
        }
    }
}

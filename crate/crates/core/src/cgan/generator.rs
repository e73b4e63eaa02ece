use rand::Rng;

use super::{ConditionEmbedding, GeneratorConfig};
use crate::error::Result;
use crate::nn::{add_into, dropout, relu, relu_backward, sigmoid, sigmoid_backward, Linear, MhaCache, MultiHeadAttention};
use crate::peak_attention::{self, PeakRefiner, RawAttentionCache};
use crate::spectrum::ConditionLabel;

/// Condition embedding → attention fusion → dense stack → upsampled token
/// sequence → attention with peak weighting → dense projection → sigmoid.
#[derive(Debug, Clone)]
pub struct Generator {
    pub config: GeneratorConfig,
    pub embed: ConditionEmbedding,
    pub fuse: MultiHeadAttention,
    pub dense_in: Linear,
    pub blocks: Vec<Linear>,
    pub dense_up: Linear,
    pub attend: MultiHeadAttention,
    pub refine: PeakRefiner,
    pub dense_out: Linear,
}

crate::impl_parameterized!(Generator {
    embed,
    fuse,
    dense_in,
    blocks,
    dense_up,
    attend,
    refine,
    dense_out
});

#[derive(Debug, Clone)]
struct DenseCache {
    input: Vec<f64>,
    pre: Vec<f64>,
    mask: Option<Vec<f64>>,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct GenCache {
    label: ConditionLabel,
    fuse: MhaCache,
    stack: Vec<DenseCache>,
    up: DenseCache,
    raw: RawAttentionCache,
    alpha: Vec<f64>,
    refined: Vec<f64>,
    attend: MhaCache,
    attended: Vec<f64>,
    weighted: Vec<f64>,
    output: Vec<f64>,
}

impl GenCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn raw_alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn refined_alpha(&self) -> &[f64] {
        &self.refined
    }
}

fn dense_act<R: Rng + ?Sized>(layer: &Linear, x: &[f64], p: f64, training: bool, rng: &mut R) -> (Vec<f64>, DenseCache) {
    let pre = layer.forward(x, 1);
    let (out, mask) = dropout(&relu(&pre), p, training, rng);
    (
        out,
        DenseCache {
            input: x.to_vec(),
            pre,
            mask,
        },
    )
}

fn dense_act_backward(layer: &mut Linear, c: &DenseCache, dout: &[f64]) -> Vec<f64> {
    let mut d = dout.to_vec();
    if let Some(m) = &c.mask {
        d.iter_mut().zip(m).for_each(|(g, m)| *g *= m);
    }
    let dpre = relu_backward(&c.pre, &d);
    layer.backward(&c.input, 1, &dpre)
}

impl Generator {
    pub fn new<R: Rng + ?Sized>(config: GeneratorConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let d = config.embed_dim;
        let h = config.hidden_dim;
        let embed = ConditionEmbedding::new(d, rng);
        let fuse = MultiHeadAttention::new(d, config.heads, rng)?;
        let dense_in = Linear::new(2 * d + config.noise_dim, h, rng);
        // residual blocks start small so the stack begins near identity
        let blocks = (0..config.depth - 2)
            .map(|_| Linear::with_bound(h, h, 0.1 / (h as f64).sqrt(), rng))
            .collect();
        let dense_up = Linear::new(h, config.seq_len * d, rng);
        let attend = MultiHeadAttention::new(d, config.heads, rng)?;
        let refine = PeakRefiner::new(config.refine_kernel, rng)?;
        let dense_out = Linear::new(config.seq_len * d, config.output_dim, rng);
        Ok(Self {
            config,
            embed,
            fuse,
            dense_in,
            blocks,
            dense_up,
            attend,
            refine,
            dense_out,
        })
    }

    /// One sample. Dropout is active only when `training` is set.
    pub fn forward<R: Rng + ?Sized>(&self, label: &ConditionLabel, z: &[f64], training: bool, rng: &mut R) -> GenCache {
        let cfg = &self.config;
        let (d, l, p) = (cfg.embed_dim, cfg.seq_len, cfg.dropout_p);
        assert_eq!(z.len(), cfg.noise_dim, "noise width");
        let e = self.embed.forward(label);
        let (h1, fuse) = self.fuse.forward_self(&e, 2);
        let mut u = h1;
        u.extend_from_slice(z);

        let mut stack = Vec::with_capacity(self.blocks.len() + 1);
        let (mut h, c) = dense_act(&self.dense_in, &u, p, training, rng);
        stack.push(c);
        for block in &self.blocks {
            let (r, c) = dense_act(block, &h, p, training, rng);
            add_into(&mut h, &r);
            stack.push(c);
        }
        let (features, up) = dense_act(&self.dense_up, &h, p, training, rng);

        let profile: Vec<f64> = features.chunks(d).map(|row| row.iter().sum::<f64>() / d as f64).collect();
        let (alpha, raw) = peak_attention::raw_attention_forward(&profile).expect("seq_len >= 2");
        let refined = self.refine.refine(&alpha);
        let (attended, attend) = self.attend.forward_self(&features, l);
        let weighted = peak_attention::apply(&attended, &refined, d).expect("shapes agree");
        let output = sigmoid(&self.dense_out.forward(&weighted, 1));
        GenCache {
            label: label.clone(),
            fuse,
            stack,
            up,
            raw,
            alpha,
            refined,
            attend,
            attended,
            weighted,
            output,
        }
    }

    /// Accumulates parameter gradients for `dout = ∂L/∂x̂`.
    pub fn backward(&mut self, cache: &GenCache, dout: &[f64]) {
        let d = self.config.embed_dim;
        let dpre = sigmoid_backward(&cache.output, dout);
        let dweighted = self.dense_out.backward(&cache.weighted, 1, &dpre);
        let (dattended, drefined) = peak_attention::apply_backward(&cache.attended, &cache.refined, d, &dweighted);
        let mut dfeatures = self.attend.backward_self(&cache.attend, &dattended);
        let dalpha = self.refine.backward(&cache.alpha, &cache.refined, &drefined);
        let dprofile = peak_attention::raw_attention_backward(&cache.raw, &dalpha);
        for (row, g) in dfeatures.chunks_mut(d).zip(&dprofile) {
            row.iter_mut().for_each(|v| *v += g / d as f64);
        }

        let mut dh = dense_act_backward(&mut self.dense_up, &cache.up, &dfeatures);
        for (block, c) in self.blocks.iter_mut().zip(&cache.stack[1..]).rev() {
            let dr = dense_act_backward(block, c, &dh);
            add_into(&mut dh, &dr);
        }
        let du = dense_act_backward(&mut self.dense_in, &cache.stack[0], &dh);
        let dh1 = &du[..2 * d];
        let de = self.fuse.backward_self(&cache.fuse, dh1);
        self.embed.backward(&cache.label, &de);
    }

    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        use rand_distr::{Distribution, StandardNormal};
        (0..self.config.noise_dim).map(|_| StandardNormal.sample(rng)).collect()
    }

    /// Inference-mode output for one condition and noise draw.
    pub fn generate_one<R: Rng + ?Sized>(&self, label: &ConditionLabel, rng: &mut R) -> Vec<f64> {
        let z = self.sample_noise(rng);
        self.forward(label, &z, false, rng).output
    }
}

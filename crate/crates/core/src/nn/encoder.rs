use rand::Rng;

use super::{add_into, relu, relu_backward, Linear, MhaCache, MultiHeadAttention};
use crate::error::Result;

/// Residual self-attention followed by a residual two-layer ReLU feed-forward.
#[derive(Debug, Clone)]
pub struct EncoderLayer {
    pub attn: MultiHeadAttention,
    pub ff1: Linear,
    pub ff2: Linear,
}

crate::impl_parameterized!(EncoderLayer { attn, ff1, ff2 });

#[derive(Debug, Clone)]
pub struct EncoderLayerCache {
    attn: MhaCache,
    h1: Vec<f64>,
    pre: Vec<f64>,
    act: Vec<f64>,
    l: usize,
}

impl EncoderLayer {
    pub fn new<R: Rng + ?Sized>(dim: usize, heads: usize, ff_dim: usize, rng: &mut R) -> Result<Self> {
        Ok(Self {
            attn: MultiHeadAttention::new(dim, heads, rng)?,
            ff1: Linear::new(dim, ff_dim, rng),
            ff2: Linear::new(ff_dim, dim, rng),
        })
    }

    pub fn forward(&self, x: &[f64], l: usize) -> (Vec<f64>, EncoderLayerCache) {
        let (a, attn) = self.attn.forward_self(x, l);
        let mut h1 = x.to_vec();
        add_into(&mut h1, &a);
        let pre = self.ff1.forward(&h1, l);
        let act = relu(&pre);
        let f = self.ff2.forward(&act, l);
        let mut out = h1.clone();
        add_into(&mut out, &f);
        (out, EncoderLayerCache { attn, h1, pre, act, l })
    }

    pub fn backward(&mut self, cache: &EncoderLayerCache, dout: &[f64]) -> Vec<f64> {
        let l = cache.l;
        let dact = self.ff2.backward(&cache.act, l, dout);
        let dpre = relu_backward(&cache.pre, &dact);
        let mut dh1 = self.ff1.backward(&cache.h1, l, &dpre);
        add_into(&mut dh1, dout);
        let mut dx = self.attn.backward_self(&cache.attn, &dh1);
        add_into(&mut dx, &dh1);
        dx
    }
}

#[derive(Debug, Clone)]
pub struct TransformerEncoder {
    pub layers: Vec<EncoderLayer>,
}

crate::impl_parameterized!(TransformerEncoder { layers });

pub type EncoderCache = Vec<EncoderLayerCache>;

impl TransformerEncoder {
    pub fn new<R: Rng + ?Sized>(dim: usize, heads: usize, ff_dim: usize, depth: usize, rng: &mut R) -> Result<Self> {
        let layers = (0..depth)
            .map(|_| EncoderLayer::new(dim, heads, ff_dim, rng))
            .collect::<Result<_>>()?;
        Ok(Self { layers })
    }

    pub fn forward(&self, x: &[f64], l: usize) -> (Vec<f64>, EncoderCache) {
        let mut h = x.to_vec();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (next, c) = layer.forward(&h, l);
            caches.push(c);
            h = next;
        }
        (h, caches)
    }

    pub fn backward(&mut self, caches: &EncoderCache, dout: &[f64]) -> Vec<f64> {
        let mut d = dout.to_vec();
        for (layer, c) in self.layers.iter_mut().zip(caches).rev() {
            d = layer.backward(c, &d);
        }
        d
    }
}

/// Fixed sine/cosine position codes, `[l, dim]`.
pub fn sinusoidal_positions(l: usize, dim: usize) -> Vec<f64> {
    let mut pe = vec![0.0; l * dim];
    for pos in 0..l {
        for i in 0..dim {
            let pair = (i / 2) as f64;
            let angle = pos as f64 / 10_000f64.powf(2.0 * pair / dim as f64);
            pe[pos * dim + i] = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    pe
}

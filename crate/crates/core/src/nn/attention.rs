use rand::Rng;

use super::{add_into, Linear, Tensor};
use crate::error::{Error, Result};

/// Scaled dot-product attention split into `heads` column groups.
///
/// `q` is `[lq, d]`, `k` and `v` are `[lk, d]`. Returns the concatenated
/// context `[lq, d]` and the attention weights `[heads, lq, lk]`.
pub fn scaled_dot_product_attention(
    q: &[f64],
    k: &[f64],
    v: &[f64],
    lq: usize,
    lk: usize,
    d: usize,
    heads: usize,
) -> (Vec<f64>, Vec<f64>) {
    let dk = d / heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let mut ctx = vec![0.0; lq * d];
    let mut attn = vec![0.0; heads * lq * lk];
    for h in 0..heads {
        let cols = h * dk..(h + 1) * dk;
        for i in 0..lq {
            let qi = &q[i * d + cols.start..i * d + cols.end];
            let row = &mut attn[(h * lq + i) * lk..(h * lq + i + 1) * lk];
            let mut m = f64::NEG_INFINITY;
            for (j, s) in row.iter_mut().enumerate() {
                *s = super::dot(qi, &k[j * d + cols.start..j * d + cols.end]) * scale;
                m = m.max(*s);
            }
            let mut sum = 0.0;
            for s in row.iter_mut() {
                *s = (*s - m).exp();
                sum += *s;
            }
            row.iter_mut().for_each(|s| *s /= sum);
            let out = &mut ctx[i * d + cols.start..i * d + cols.end];
            for (j, &a) in row.iter().enumerate() {
                let vj = &v[j * d + cols.start..j * d + cols.end];
                out.iter_mut().zip(vj).for_each(|(o, x)| *o += a * x);
            }
        }
    }
    (ctx, attn)
}

/// Multi-head attention with input projections and an output projection.
#[derive(Debug, Clone)]
pub struct MultiHeadAttention {
    pub wq: Linear,
    pub wk: Linear,
    pub wv: Linear,
    pub wo: Linear,
    pub heads: usize,
}

crate::impl_parameterized!(MultiHeadAttention { wq, wk, wv, wo });

/// Everything the backward pass needs from one forward call.
#[derive(Debug, Clone)]
pub struct MhaCache {
    q_in: Vec<f64>,
    k_in: Vec<f64>,
    v_in: Vec<f64>,
    lq: usize,
    lk: usize,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    pub attn: Vec<f64>,
    ctx: Vec<f64>,
}

impl MultiHeadAttention {
    pub fn new<R: Rng + ?Sized>(dim: usize, heads: usize, rng: &mut R) -> Result<Self> {
        if heads == 0 || dim % heads != 0 {
            return Err(Error::config(format!("model width {dim} is not divisible by {heads} heads")));
        }
        Ok(Self {
            wq: Linear::new(dim, dim, rng),
            wk: Linear::new(dim, dim, rng),
            wv: Linear::new(dim, dim, rng),
            wo: Linear::new(dim, dim, rng),
            heads,
        })
    }

    pub fn dim(&self) -> usize {
        self.wq.d_in()
    }

    pub fn forward(&self, q_in: &[f64], k_in: &[f64], v_in: &[f64], lq: usize, lk: usize) -> (Vec<f64>, MhaCache) {
        let d = self.dim();
        let q = self.wq.forward(q_in, lq);
        let k = self.wk.forward(k_in, lk);
        let v = self.wv.forward(v_in, lk);
        let (ctx, attn) = scaled_dot_product_attention(&q, &k, &v, lq, lk, d, self.heads);
        let out = self.wo.forward(&ctx, lq);
        let cache = MhaCache {
            q_in: q_in.to_vec(),
            k_in: k_in.to_vec(),
            v_in: v_in.to_vec(),
            lq,
            lk,
            q,
            k,
            v,
            attn,
            ctx,
        };
        (out, cache)
    }

    pub fn forward_self(&self, x: &[f64], l: usize) -> (Vec<f64>, MhaCache) {
        self.forward(x, x, x, l, l)
    }

    /// Returns gradients with respect to the query, key and value inputs.
    pub fn backward(&mut self, cache: &MhaCache, dout: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let (lq, lk, heads) = (cache.lq, cache.lk, self.heads);
        let dk = d / heads;
        let scale = 1.0 / (dk as f64).sqrt();
        let dctx = self.wo.backward(&cache.ctx, lq, dout);

        let mut dq = vec![0.0; lq * d];
        let mut dkk = vec![0.0; lk * d];
        let mut dv = vec![0.0; lk * d];
        let mut da = vec![0.0; lk];
        for h in 0..heads {
            let c0 = h * dk;
            for i in 0..lq {
                let a = &cache.attn[(h * lq + i) * lk..(h * lq + i + 1) * lk];
                let dci = &dctx[i * d + c0..i * d + c0 + dk];
                for j in 0..lk {
                    let vj = &cache.v[j * d + c0..j * d + c0 + dk];
                    da[j] = super::dot(dci, vj);
                    let dvj = &mut dv[j * d + c0..j * d + c0 + dk];
                    dvj.iter_mut().zip(dci).for_each(|(g, x)| *g += a[j] * x);
                }
                let s: f64 = a.iter().zip(&da).map(|(x, y)| x * y).sum();
                for j in 0..lk {
                    let ds = a[j] * (da[j] - s) * scale;
                    if ds == 0.0 {
                        continue;
                    }
                    for c in 0..dk {
                        dq[i * d + c0 + c] += ds * cache.k[j * d + c0 + c];
                        dkk[j * d + c0 + c] += ds * cache.q[i * d + c0 + c];
                    }
                }
            }
        }
        let dq_in = self.wq.backward(&cache.q_in, lq, &dq);
        let dk_in = self.wk.backward(&cache.k_in, lk, &dkk);
        let dv_in = self.wv.backward(&cache.v_in, lk, &dv);
        (dq_in, dk_in, dv_in)
    }

    pub fn backward_self(&mut self, cache: &MhaCache, dout: &[f64]) -> Vec<f64> {
        let (mut dx, dk, dv) = self.backward(cache, dout);
        add_into(&mut dx, &dk);
        add_into(&mut dx, &dv);
        dx
    }

    /// Tensor-level entry point: `Q, K, V: [L, d] -> [L, d]`.
    pub fn attend(&self, q: &Tensor, k: &Tensor, v: &Tensor) -> Result<Tensor> {
        let d = self.dim();
        let (lq, dq) = q.dims2()?;
        let (lk, dkk) = k.dims2()?;
        let (lv, dv) = v.dims2()?;
        if dq != d || dkk != d || dv != d || lk != lv {
            return Err(Error::contract(format!("attention inputs must be [L, {d}] with matching key/value lengths")));
        }
        let (out, _) = self.forward(&q.data, &k.data, &v.data, lq, lk);
        Tensor::new(vec![lq, d], out)
    }
}

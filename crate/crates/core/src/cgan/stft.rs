use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Hann-windowed short-time Fourier magnitudes with precomputed DFT tables.
#[derive(Debug, Clone)]
pub struct Stft {
    window_len: usize,
    hop: usize,
    window: Vec<f64>,
    /// `[bins, window_len]` of `w[n] cos(2πkn/N)` and `w[n] sin(2πkn/N)`.
    cos: Vec<f64>,
    sin: Vec<f64>,
}

/// Real and imaginary parts from a forward pass, `[frames, bins]`.
#[derive(Debug, Clone)]
pub struct StftCache {
    re: Vec<f64>,
    im: Vec<f64>,
    mag: Vec<f64>,
    frames: usize,
}

impl StftCache {
    pub fn magnitudes(&self) -> &[f64] {
        &self.mag
    }
}

impl Stft {
    pub fn new(window_len: usize, hop: usize) -> Result<Self> {
        if window_len < 2 || !window_len.is_power_of_two() {
            return Err(Error::config(format!("STFT window {window_len} is not a power of two >= 2")));
        }
        if hop == 0 || hop > window_len {
            return Err(Error::config(format!("STFT hop {hop} outside [1, {window_len}]")));
        }
        let n = window_len as f64;
        let window: Vec<f64> = (0..window_len).map(|i| 0.5 * (1.0 - (TAU * i as f64 / n).cos())).collect();
        let bins = window_len / 2 + 1;
        let mut cos = vec![0.0; bins * window_len];
        let mut sin = vec![0.0; bins * window_len];
        for k in 0..bins {
            for i in 0..window_len {
                let phase = TAU * ((k * i) % window_len) as f64 / n;
                cos[k * window_len + i] = window[i] * phase.cos();
                sin[k * window_len + i] = window[i] * phase.sin();
            }
        }
        Ok(Self {
            window_len,
            hop,
            window,
            cos,
            sin,
        })
    }

    pub fn bins(&self) -> usize {
        self.window_len / 2 + 1
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    pub fn frames(&self, len: usize) -> Result<usize> {
        if self.window_len > len {
            return Err(Error::config(format!(
                "STFT window {} exceeds signal length {len}",
                self.window_len
            )));
        }
        Ok((len - self.window_len) / self.hop + 1)
    }

    /// Magnitudes `[frames, bins]` plus the cache for [`Stft::backward`].
    pub fn forward(&self, x: &[f64]) -> Result<StftCache> {
        let frames = self.frames(x.len())?;
        let (n, bins) = (self.window_len, self.bins());
        let mut re = vec![0.0; frames * bins];
        let mut im = vec![0.0; frames * bins];
        for f in 0..frames {
            let seg = &x[f * self.hop..f * self.hop + n];
            for k in 0..bins {
                re[f * bins + k] = crate::nn::dot(seg, &self.cos[k * n..(k + 1) * n]);
                im[f * bins + k] = -crate::nn::dot(seg, &self.sin[k * n..(k + 1) * n]);
            }
        }
        let mag = re.iter().zip(&im).map(|(a, b)| a.hypot(*b)).collect();
        Ok(StftCache { re, im, mag, frames })
    }

    pub fn magnitudes(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.mag)
    }

    /// Gradient with respect to the signal; a zero magnitude passes no gradient.
    pub fn backward(&self, cache: &StftCache, len: usize, dmag: &[f64]) -> Vec<f64> {
        let (n, bins) = (self.window_len, self.bins());
        let mut dx = vec![0.0; len];
        for f in 0..cache.frames {
            let seg = &mut dx[f * self.hop..f * self.hop + n];
            for k in 0..bins {
                let idx = f * bins + k;
                let m = cache.mag[idx];
                if m == 0.0 || dmag[idx] == 0.0 {
                    continue;
                }
                let dre = dmag[idx] * cache.re[idx] / m;
                let dim = -dmag[idx] * cache.im[idx] / m;
                let (c, s) = (&self.cos[k * n..(k + 1) * n], &self.sin[k * n..(k + 1) * n]);
                for i in 0..n {
                    seg[i] += dre * c[i] + dim * s[i];
                }
            }
        }
        dx
    }
}

use rand::Rng;

use super::{Param, Tensor};
use crate::error::{Error, Result};

/// 1-D cross-correlation with zero padding. Weights are `[c_out, c_in, k]`.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub w: Param,
    pub b: Param,
    pub stride: usize,
    pub padding: usize,
}

crate::impl_parameterized!(Conv1d { w, b });

fn out_len(t: usize, k: usize, stride: usize, padding: usize) -> Option<usize> {
    let span = t + 2 * padding;
    (span >= k && stride > 0).then(|| (span - k) / stride + 1)
}

impl Conv1d {
    pub fn new<R: Rng + ?Sized>(
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut R,
    ) -> Self {
        let bound = (6.0 / ((c_in + c_out) * kernel) as f64).sqrt();
        Self {
            w: Param::uniform(&[c_out, c_in, kernel], bound, rng),
            b: Param::zeros(&[c_out]),
            stride,
            padding,
        }
    }

    /// Stride-1 convolution that preserves length; `kernel` must be odd.
    pub fn same<R: Rng + ?Sized>(c_in: usize, c_out: usize, kernel: usize, rng: &mut R) -> Result<Self> {
        if kernel % 2 == 0 {
            return Err(Error::config(format!("length-preserving conv needs an odd kernel, got {kernel}")));
        }
        Ok(Self::new(c_in, c_out, kernel, 1, kernel / 2, rng))
    }

    pub fn c_out(&self) -> usize {
        self.w.value.shape[0]
    }

    pub fn c_in(&self) -> usize {
        self.w.value.shape[1]
    }

    pub fn kernel(&self) -> usize {
        self.w.value.shape[2]
    }

    pub fn output_len(&self, t: usize) -> usize {
        out_len(t, self.kernel(), self.stride, self.padding).expect("input shorter than kernel")
    }

    /// `x` is `[c_in, t]`; returns `[c_out, t_out]`.
    pub fn forward(&self, x: &[f64], t: usize) -> Vec<f64> {
        let (cout, cin, k) = (self.c_out(), self.c_in(), self.kernel());
        assert_eq!(x.len(), cin * t, "conv input length");
        let tout = self.output_len(t);
        let mut y = vec![0.0; cout * tout];
        let w = self.w.data();
        for o in 0..cout {
            let yrow = &mut y[o * tout..(o + 1) * tout];
            yrow.iter_mut().for_each(|v| *v = self.b.data()[o]);
            for c in 0..cin {
                let xrow = &x[c * t..(c + 1) * t];
                let wk = &w[(o * cin + c) * k..(o * cin + c + 1) * k];
                for (ti, yv) in yrow.iter_mut().enumerate() {
                    let start = (ti * self.stride) as isize - self.padding as isize;
                    let mut acc = 0.0;
                    for (j, &wv) in wk.iter().enumerate() {
                        let idx = start + j as isize;
                        if idx >= 0 && (idx as usize) < t {
                            acc += wv * xrow[idx as usize];
                        }
                    }
                    *yv += acc;
                }
            }
        }
        y
    }

    pub fn backward(&mut self, x: &[f64], t: usize, dy: &[f64]) -> Vec<f64> {
        let (cout, cin, k) = (self.c_out(), self.c_in(), self.kernel());
        let tout = self.output_len(t);
        let mut dx = vec![0.0; cin * t];
        for o in 0..cout {
            let dyrow = &dy[o * tout..(o + 1) * tout];
            self.b.grad[o] += dyrow.iter().sum::<f64>();
            for c in 0..cin {
                let base = (o * cin + c) * k;
                for (ti, &d) in dyrow.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let start = (ti * self.stride) as isize - self.padding as isize;
                    for j in 0..k {
                        let idx = start + j as isize;
                        if idx >= 0 && (idx as usize) < t {
                            let idx = idx as usize;
                            self.w.grad[base + j] += d * x[c * t + idx];
                            dx[c * t + idx] += d * self.w.value.data[base + j];
                        }
                    }
                }
            }
        }
        dx
    }
}

fn check_conv(x: &Tensor, kernels: &Tensor, padding: usize) -> Result<(usize, usize, usize, usize, usize, usize)> {
    let [n, cin, t] = x.shape[..] else {
        return Err(Error::contract(format!("conv input must be [N, C_in, T], got {:?}", x.shape)));
    };
    let [cout, kcin, k] = kernels.shape[..] else {
        return Err(Error::contract("kernels must be [C_out, C_in, k]"));
    };
    if kcin != cin {
        return Err(Error::contract(format!("input has {cin} channels, kernels expect {kcin}")));
    }
    let tout = out_len(t, k, 1, padding)
        .ok_or_else(|| Error::contract(format!("T={t} too short for kernel {k} with padding {padding}")))?;
    Ok((n, cin, t, cout, k, tout))
}

fn layer_from(kernels: &Tensor, padding: usize) -> Conv1d {
    Conv1d {
        w: Param::new(kernels.clone()),
        b: Param::zeros(&[kernels.shape[0]]),
        stride: 1,
        padding,
    }
}

/// Batched, bias-free, stride-1 convolution: `[N, C_in, T] -> [N, C_out, T_out]`.
pub fn conv1d_forward(x: &Tensor, kernels: &Tensor, padding: usize) -> Result<Tensor> {
    let (n, cin, t, cout, _, tout) = check_conv(x, kernels, padding)?;
    let layer = layer_from(kernels, padding);
    let mut out = Vec::with_capacity(n * cout * tout);
    for sample in x.data.chunks(cin * t) {
        out.extend(layer.forward(sample, t));
    }
    Tensor::new(vec![n, cout, tout], out)
}

/// Returns `(dx, dkernels)` for upstream gradient `dy: [N, C_out, T_out]`.
pub fn conv1d_backward(x: &Tensor, kernels: &Tensor, padding: usize, dy: &Tensor) -> Result<(Tensor, Tensor)> {
    let (n, cin, t, cout, _, tout) = check_conv(x, kernels, padding)?;
    if dy.shape != [n, cout, tout] {
        return Err(Error::contract("dy shape does not match the conv output"));
    }
    let mut layer = layer_from(kernels, padding);
    let mut dx = Vec::with_capacity(x.len());
    for (sample, d) in x.data.chunks(cin * t).zip(dy.data.chunks(cout * tout)) {
        dx.extend(layer.backward(sample, t, d));
    }
    Ok((Tensor::new(x.shape.clone(), dx)?, Tensor::new(kernels.shape.clone(), layer.w.grad)?))
}

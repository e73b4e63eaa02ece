use rand::Rng;

use super::{matmul_acc, matmul_at_acc, matmul_bt_acc, Param, Tensor};
use crate::error::{Error, Result};

/// Fully connected layer, `y = x W + b` with `W: [in, out]`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: Param,
    pub b: Param,
}

crate::impl_parameterized!(Linear { w, b });

impl Linear {
    /// Xavier-uniform weights, zero bias.
    pub fn new<R: Rng + ?Sized>(d_in: usize, d_out: usize, rng: &mut R) -> Self {
        let bound = (6.0 / (d_in + d_out) as f64).sqrt();
        Self::with_bound(d_in, d_out, bound, rng)
    }

    pub fn with_bound<R: Rng + ?Sized>(d_in: usize, d_out: usize, bound: f64, rng: &mut R) -> Self {
        Self {
            w: Param::uniform(&[d_in, d_out], bound, rng),
            b: Param::zeros(&[d_out]),
        }
    }

    pub fn d_in(&self) -> usize {
        self.w.value.shape[0]
    }

    pub fn d_out(&self) -> usize {
        self.w.value.shape[1]
    }

    /// `x` holds `n` rows of width `d_in`.
    pub fn forward(&self, x: &[f64], n: usize) -> Vec<f64> {
        let (din, dout) = (self.d_in(), self.d_out());
        assert_eq!(x.len(), n * din, "linear input length");
        let mut y = Vec::with_capacity(n * dout);
        for _ in 0..n {
            y.extend_from_slice(self.b.data());
        }
        matmul_acc(x, self.w.data(), n, din, dout, &mut y);
        y
    }

    /// Accumulates `dW`, `db` and returns `dx`.
    pub fn backward(&mut self, x: &[f64], n: usize, dy: &[f64]) -> Vec<f64> {
        let (din, dout) = (self.d_in(), self.d_out());
        matmul_at_acc(x, dy, n, din, dout, &mut self.w.grad);
        for row in dy.chunks(dout) {
            self.b.grad.iter_mut().zip(row).for_each(|(g, d)| *g += d);
        }
        let mut dx = vec![0.0; n * din];
        matmul_bt_acc(dy, self.w.data(), n, dout, din, &mut dx);
        dx
    }

    /// Backward pass that skips the input gradient (first layer of a stack).
    pub fn backward_params(&mut self, x: &[f64], n: usize, dy: &[f64]) {
        let (din, dout) = (self.d_in(), self.d_out());
        matmul_at_acc(x, dy, n, din, dout, &mut self.w.grad);
        for row in dy.chunks(dout) {
            self.b.grad.iter_mut().zip(row).for_each(|(g, d)| *g += d);
        }
    }
}

fn check_linear(x: &Tensor, w: &Tensor) -> Result<(usize, usize, usize)> {
    let (n, din) = x.dims2()?;
    let (win, dout) = w.dims2()?;
    if din != win {
        return Err(Error::contract(format!("x has {din} columns but W has {win} rows")));
    }
    Ok((n, din, dout))
}

/// `y = x W + b` on explicit tensors.
pub fn linear_forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (n, din, dout) = check_linear(x, w)?;
    if b.shape != [dout] {
        return Err(Error::contract(format!("bias shape {:?}, expected [{dout}]", b.shape)));
    }
    let mut y = Vec::with_capacity(n * dout);
    for _ in 0..n {
        y.extend_from_slice(&b.data);
    }
    matmul_acc(&x.data, &w.data, n, din, dout, &mut y);
    Tensor::new(vec![n, dout], y)
}

/// Returns `(dx, dW, db)` for upstream gradient `dy`.
pub fn linear_backward(x: &Tensor, w: &Tensor, dy: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
    let (n, din, dout) = check_linear(x, w)?;
    if dy.shape != [n, dout] {
        return Err(Error::contract("dy shape does not match the layer output"));
    }
    let mut dx = vec![0.0; n * din];
    matmul_bt_acc(&dy.data, &w.data, n, dout, din, &mut dx);
    let mut dw = vec![0.0; din * dout];
    matmul_at_acc(&x.data, &dy.data, n, din, dout, &mut dw);
    let mut db = vec![0.0; dout];
    for row in dy.data.chunks(dout) {
        db.iter_mut().zip(row).for_each(|(g, d)| *g += d);
    }
    Ok((
        Tensor::new(vec![n, din], dx)?,
        Tensor::new(vec![din, dout], dw)?,
        Tensor::new(vec![dout], db)?,
    ))
}

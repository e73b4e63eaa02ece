use rand::Rng;

use super::branch;

pub fn relu(x: &[f64]) -> Vec<f64> {
    branch::record_signs(x);
    x.iter().map(|v| v.max(0.0)).collect()
}

/// Gradient through ReLU given the pre-activation.
pub fn relu_backward(pre: &[f64], dy: &[f64]) -> Vec<f64> {
    pre.iter()
        .zip(dy)
        .map(|(p, d)| if *p > 0.0 { *d } else { 0.0 })
        .collect()
}

#[inline]
pub fn sigmoid_scalar(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| sigmoid_scalar(*v)).collect()
}

/// Gradient through sigmoid given its output.
pub fn sigmoid_backward(y: &[f64], dy: &[f64]) -> Vec<f64> {
    y.iter().zip(dy).map(|(y, d)| d * y * (1.0 - y)).collect()
}

/// `log(1 + e^v)` without overflow.
#[inline]
pub fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

/// Row-wise softmax over a `[rows, cols]` buffer, max-shifted.
pub fn softmax_rows(x: &[f64], cols: usize) -> Vec<f64> {
    let mut out = x.to_vec();
    for row in out.chunks_mut(cols) {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    out
}

/// Gradient through a row-wise softmax given its output.
pub fn softmax_backward(y: &[f64], dy: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    for ((yr, dr), or) in y.chunks(cols).zip(dy.chunks(cols)).zip(out.chunks_mut(cols)) {
        let s: f64 = yr.iter().zip(dr).map(|(a, b)| a * b).sum();
        for ((o, a), d) in or.iter_mut().zip(yr).zip(dr) {
            *o = a * (d - s);
        }
    }
    out
}

/// Inverted dropout. Returns the output and, in training mode, the scaling
/// mask (`0` or `1/(1-p)`) needed for the backward pass.
pub fn dropout<R: Rng + ?Sized>(
    x: &[f64],
    p: f64,
    training: bool,
    rng: &mut R,
) -> (Vec<f64>, Option<Vec<f64>>) {
    assert!((0.0..1.0).contains(&p), "dropout probability must lie in [0, 1)");
    if !training || p == 0.0 {
        return (x.to_vec(), None);
    }
    let keep = 1.0 / (1.0 - p);
    let mask: Vec<f64> = (0..x.len())
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect();
    let y = x.iter().zip(&mask).map(|(a, m)| a * m).collect();
    (y, Some(mask))
}

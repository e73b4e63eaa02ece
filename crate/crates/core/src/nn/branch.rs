//! Branch tracing for finite-difference checks.
//!
//! Piecewise operations (ReLU, `|x|`, argmax selection) report which branch
//! they took while a trace is active. Two evaluations that straddle a kink
//! produce different trace hashes, and the gradient checker skips that
//! coordinate: the function is not differentiable there.

use std::cell::Cell;

thread_local! {
    static TRACE: Cell<Option<u64>> = const { Cell::new(None) };
}

const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

pub fn start() {
    TRACE.with(|t| t.set(Some(FNV_OFFSET)));
}

/// Stops tracing and returns the hash of every branch recorded since [`start`].
pub fn finish() -> u64 {
    TRACE.with(|t| t.take().unwrap_or(0))
}

#[inline]
pub fn active() -> bool {
    TRACE.with(|t| t.get().is_some())
}

#[inline]
fn mix(h: u64, v: u64) -> u64 {
    (h ^ v).wrapping_mul(FNV_PRIME)
}

/// Records the sign pattern of `x` (`> 0`).
pub fn record_signs(x: &[f64]) {
    if !active() {
        return;
    }
    TRACE.with(|t| {
        let mut h = t.get().unwrap_or(FNV_OFFSET);
        for chunk in x.chunks(64) {
            let mut bits = 0u64;
            for (i, v) in chunk.iter().enumerate() {
                if *v > 0.0 {
                    bits |= 1 << i;
                }
            }
            h = mix(h, bits);
        }
        t.set(Some(h));
    });
}

pub fn record_index(i: usize) {
    if !active() {
        return;
    }
    TRACE.with(|t| {
        let h = t.get().unwrap_or(FNV_OFFSET);
        t.set(Some(mix(h, i as u64 ^ 0x9e37_79b9_7f4a_7c15)));
    });
}

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{branch, Parameterized};

/// Gradients below this magnitude are compared absolutely.
const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub checked: usize,
    /// Coordinates whose ±ε evaluations took different branches of a kink.
    pub skipped: usize,
    pub worst: Option<String>,
}

impl GradCheckReport {
    fn record(&mut self, rel: f64, label: impl FnOnce() -> String) {
        self.checked += 1;
        if self.worst.is_none() || rel > self.max_rel_err {
            self.max_rel_err = rel;
            self.worst = Some(label());
        }
    }

    pub fn merge(&mut self, other: GradCheckReport) {
        if other.max_rel_err > self.max_rel_err {
            self.max_rel_err = other.max_rel_err;
            self.worst = other.worst;
        }
        self.checked += other.checked;
        self.skipped += other.skipped;
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

fn traced<F: FnOnce() -> f64>(f: F) -> (f64, u64) {
    branch::start();
    let v = f();
    (v, branch::finish())
}

/// Central differences of `f` around `x` compared with `analytic`.
pub fn grad_check<F>(x: &[f64], analytic: &[f64], eps: f64, mut f: F) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(x.len(), analytic.len());
    let mut report = GradCheckReport::default();
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + eps;
        let (fp, hp) = traced(|| f(&probe));
        probe[i] = x[i] - eps;
        let (fm, hm) = traced(|| f(&probe));
        probe[i] = x[i];
        if hp != hm {
            report.skipped += 1;
            continue;
        }
        let numeric = (fp - fm) / (2.0 * eps);
        report.record(relative_error(analytic[i], numeric), || {
            format!("input[{i}]: analytic {} numeric {numeric}", analytic[i])
        });
    }
    report
}

/// Central differences over a model's parameters.
///
/// `grads` must leave the analytic gradient of `loss` in every parameter's
/// `grad` buffer. At most `max_coords` coordinates per parameter tensor are
/// probed, chosen with `seed`.
pub fn grad_check_params<M: Parameterized>(
    model: &mut M,
    eps: f64,
    max_coords: usize,
    seed: u64,
    loss: &mut dyn FnMut(&M) -> f64,
    grads: &mut dyn FnMut(&mut M),
) -> GradCheckReport {
    grads(model);
    let analytic: Vec<(String, Vec<f64>)> = model
        .named_params()
        .into_iter()
        .map(|(n, p)| (n, p.grad.clone()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport::default();

    for (pi, (name, g)) in analytic.iter().enumerate() {
        let coords: Vec<usize> = if g.len() <= max_coords {
            (0..g.len()).collect()
        } else {
            let mut c = sample(&mut rng, g.len(), max_coords).into_vec();
            c.sort_unstable();
            c
        };
        for c in coords {
            let original = model.named_params_mut()[pi].1.value.data[c];
            model.named_params_mut()[pi].1.value.data[c] = original + eps;
            let (fp, hp) = traced(|| loss(model));
            model.named_params_mut()[pi].1.value.data[c] = original - eps;
            let (fm, hm) = traced(|| loss(model));
            model.named_params_mut()[pi].1.value.data[c] = original;
            if hp != hm {
                report.skipped += 1;
                continue;
            }
            let numeric = (fp - fm) / (2.0 * eps);
            report.record(relative_error(g[c], numeric), || {
                format!("{name}[{c}]: analytic {} numeric {numeric}", g[c])
            });
        }
    }
    report
}

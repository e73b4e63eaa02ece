use rand::Rng;

use crate::nn::{add_into, Param};
use crate::spectrum::ConditionLabel;

/// Two-token condition encoding: the solvent row, then the sum of solute rows.
#[derive(Debug, Clone)]
pub struct ConditionEmbedding {
    pub solvent: Param,
    pub solute: Param,
}

crate::impl_parameterized!(ConditionEmbedding { solvent, solute });

impl ConditionEmbedding {
    pub fn new<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self {
            solvent: Param::normal(&[4, dim], 1.0, rng),
            solute: Param::normal(&[6, dim], 1.0, rng),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            solvent: Param::zeros(&[4, dim]),
            solute: Param::zeros(&[6, dim]),
        }
    }

    pub fn dim(&self) -> usize {
        self.solvent.value.shape[1]
    }

    /// `[2, dim]`.
    pub fn forward(&self, label: &ConditionLabel) -> Vec<f64> {
        let d = self.dim();
        let s = label.solvent().index();
        let mut out = self.solvent.data()[s * d..(s + 1) * d].to_vec();
        let mut tok = vec![0.0; d];
        for solute in label.solutes() {
            let i = solute.index();
            add_into(&mut tok, &self.solute.data()[i * d..(i + 1) * d]);
        }
        out.extend(tok);
        out
    }

    pub fn backward(&mut self, label: &ConditionLabel, dout: &[f64]) {
        let d = self.dim();
        let s = label.solvent().index();
        add_into(&mut self.solvent.grad[s * d..(s + 1) * d], &dout[..d]);
        for solute in label.solutes() {
            let i = solute.index();
            add_into(&mut self.solute.grad[i * d..(i + 1) * d], &dout[d..2 * d]);
        }
    }
}

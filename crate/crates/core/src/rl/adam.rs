use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::numcore::{Gradients, ParamStore, Tensor};

/// Adaptive moment estimation with per-parameter bias correction.
///
/// Parameters that receive no gradient in a step are left untouched and
/// their moments do not decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
    steps: Vec<u64>,
}

impl Adam {
    pub fn new(params: &ParamStore, learning_rate: f64) -> Self {
        let first: Vec<Tensor> = params.iter().map(|(_, _, t)| Tensor::zeros(t.shape())).collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            second: first.clone(),
            steps: alloc::vec![0; first.len()],
            first,
        }
    }

    /// True when moment shapes line up with `params`.
    pub fn matches(&self, params: &ParamStore) -> bool {
        self.first.len() == params.len()
            && params
                .iter()
                .zip(&self.first)
                .all(|((_, _, p), m)| p.shape() == m.shape())
    }

    pub fn step(&mut self, params: &mut ParamStore, grads: &Gradients) {
        for (id, g) in grads.iter() {
            let i = id.0;
            self.steps[i] += 1;
            let t = self.steps[i] as f64;
            let c1 = 1.0 - libm::pow(self.beta1, t);
            let c2 = 1.0 - libm::pow(self.beta2, t);
            let m = self.first[i].data_mut();
            let v = self.second[i].data_mut();
            let p = params.get_mut(id).data_mut();
            for j in 0..p.len() {
                let gj = g.data()[j];
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * gj;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * gj * gj;
                let mhat = m[j] / c1;
                let vhat = v[j] / c2;
                p[j] -= self.learning_rate * mhat / (math::sqrt(vhat) + self.eps);
            }
        }
    }
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}

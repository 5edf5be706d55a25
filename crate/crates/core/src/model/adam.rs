use crate::graph::DenseMatrix;

use super::{Gradients, Parameters};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    /// Decoupled shrinkage applied to encoder and decoder only.
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments for `[encoder, decoder, centers]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: [DenseMatrix; 3],
    pub second: [DenseMatrix; 3],
    pub step: u64,
}

impl AdamState {
    pub fn zeros_like(params: &Parameters) -> Self {
        let z = |m: &DenseMatrix| DenseMatrix::zeros(m.nrows(), m.ncols());
        let first = params.tensors().map(z);
        let second = params.tensors().map(z);
        Self { first, second, step: 0 }
    }
}

/// One bias-corrected Adam update with decoupled weight decay.
///
/// Tensors whose gradient is `None` (a disabled decoder) are left untouched.
pub fn adam_step(params: &mut Parameters, state: &mut AdamState, grads: &Gradients, cfg: &AdamConfig) {
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - cfg.beta1.powi(t);
    let bias2 = 1.0 - cfg.beta2.powi(t);
    let grads = [Some(&grads.encoder), grads.decoder.as_ref(), Some(&grads.centers)];
    for (idx, (param, grad)) in params.tensors_mut().into_iter().zip(grads).enumerate() {
        let Some(grad) = grad else { continue };
        let decay = if idx < 2 { cfg.weight_decay } else { 0.0 };
        let m = &mut state.first[idx];
        let v = &mut state.second[idx];
        for ((p, g), (mi, vi)) in param
            .iter_mut()
            .zip(grad.iter())
            .zip(m.iter_mut().zip(v.iter_mut()))
        {
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * g;
            *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * g * g;
            let m_hat = *mi / bias1;
            let v_hat = *vi / bias2;
            *p -= cfg.learning_rate * decay * *p;
            *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

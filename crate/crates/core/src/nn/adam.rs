use super::model::{Gradients, ModelWeights};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First/second moment estimates and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    first: ModelWeights,
    second: ModelWeights,
}

impl AdamState {
    pub fn new(like: &ModelWeights) -> Self {
        let mut zero = like.clone();
        zero.scale(0.0);
        Self { step: 0, first: zero.clone(), second: zero }
    }
}

/// One bias-corrected Adam update of `weights` in place.
pub fn adam_step(
    weights: &mut ModelWeights,
    gradients: &Gradients,
    state: &mut AdamState,
    config: &AdamConfig,
) -> Result<()> {
    let grads = gradients.0.tensors();
    if grads.len() != state.first.tensors().len()
        || grads.iter().zip(weights.tensors()).any(|(g, w)| g.len() != w.len())
    {
        return Err(Error::ShapeMismatch("gradients do not match weights".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - config.beta1.powi(t);
    let bias2 = 1.0 - config.beta2.powi(t);
    let (b1, b2) = (config.beta1, config.beta2);

    for (((w, g), m), v) in weights
        .tensors_mut()
        .into_iter()
        .zip(grads)
        .zip(state.first.tensors_mut())
        .zip(state.second.tensors_mut())
    {
        for j in 0..w.len() {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            let m_hat = m[j] / bias1;
            let v_hat = v[j] / bias2;
            w[j] -= config.lr * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
    Ok(())
}

//! Adam optimizer.

use serde::{Deserialize, Serialize};

use super::network::{Gradients, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates per tensor, plus the step count.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn for_tensors(tensors: &[Tensor]) -> Self {
        Self {
            m: tensors.iter().map(|t| vec![0.0; t.data.len()]).collect(),
            v: tensors.iter().map(|t| vec![0.0; t.data.len()]).collect(),
            step: 0,
        }
    }
}

/// One bias-corrected update: `theta -= lr * m_hat / (sqrt(v_hat) + eps)`.
///
/// Non-finite gradients are rejected before any state changes.
pub fn adam_step(cfg: &AdamConfig, tensors: &mut [Tensor], state: &mut AdamState, grads: &Gradients) -> Result<()> {
    if grads.0.len() != tensors.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} gradient tensors for {} parameters",
            grads.0.len(),
            tensors.len()
        )));
    }
    for (t, g) in tensors.iter().zip(&grads.0) {
        if g.len() != t.data.len() {
            return Err(Error::ShapeMismatch(format!("gradient for {} has wrong length", t.name)));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of {}", t.name)));
        }
    }
    state.step += 1;
    let bc1 = 1.0 - cfg.beta1.powf(state.step as f64);
    let bc2 = 1.0 - cfg.beta2.powf(state.step as f64);
    for (k, t) in tensors.iter_mut().enumerate() {
        let (m, v, g) = (&mut state.m[k], &mut state.v[k], &grads.0[k]);
        for j in 0..t.data.len() {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            t.data[j] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(values: Vec<f64>) -> Vec<Tensor> {
        vec![Tensor {
            name: "w".into(),
            shape: vec![values.len()],
            data: values,
        }]
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig::default();
        let mut t = one(vec![0.0, 1.0, -2.0]);
        let mut s = AdamState::for_tensors(&t);
        let g = vec![0.5, -3.0, 0.0];
        adam_step(&cfg, &mut t, &mut s, &Gradients(vec![g.clone()])).unwrap();
        for (j, start) in [0.0, 1.0, -2.0].into_iter().enumerate() {
            let expect = start - cfg.learning_rate * g[j] / (g[j].abs() + cfg.epsilon);
            assert!((t[0].data[j] - expect).abs() < 1e-15);
        }
        assert_eq!(s.step, 1);
    }

    #[test]
    fn rejects_non_finite_without_mutating() {
        let cfg = AdamConfig::default();
        let mut t = one(vec![1.0]);
        let mut s = AdamState::for_tensors(&t);
        let before = (t.clone(), s.clone());
        let err = adam_step(&cfg, &mut t, &mut s, &Gradients(vec![vec![f64::NAN]])).unwrap_err();
        assert!(err.is_numeric());
        assert_eq!((t, s), before);
    }
}

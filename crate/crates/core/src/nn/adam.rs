use serde::{Deserialize, Serialize};

use super::network::ParamSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..AdamConfig::default()
        }
    }
}

/// First/second moment estimates, flattened over the trainable buffers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &ParamSet) -> Self {
        let n = params.parameter_count();
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut ParamSet, grads: &ParamSet, state: &mut AdamState, cfg: &AdamConfig) {
    let n = params.parameter_count();
    if state.m.len() != n {
        *state = AdamState::new(params);
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let mut k = 0;
    for (p_buf, g_buf) in params.trainable_mut().into_iter().zip(grads.trainable()) {
        assert_eq!(p_buf.len(), g_buf.len(), "gradient shape does not match parameters");
        for (p, g) in p_buf.iter_mut().zip(g_buf) {
            let m = &mut state.m[k];
            let v = &mut state.v[k];
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            k += 1;
        }
    }
}

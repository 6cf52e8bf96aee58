use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::{Gradients, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub step: u64,
    pub first_moment: ParamSet,
    pub second_moment: ParamSet,
}

impl OptimizerState {
    pub fn new(config: AdamConfig, params: &ParamSet) -> Self {
        Self {
            config,
            step: 0,
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
        }
    }
}

/// One bias-corrected Adam update. Consumes and returns both the parameters
/// and the optimizer state.
pub fn adam_step(
    mut state: OptimizerState,
    mut params: ParamSet,
    grads: &Gradients,
) -> Result<(ParamSet, OptimizerState)> {
    params.check_layout(grads)?;
    params.check_layout(&state.first_moment)?;
    state.step += 1;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (key, p) in params.iter_mut() {
        let g = grads.get(key)?;
        let m = state.first_moment.get_mut(key)?;
        for (mi, &gi) in m.data_mut().iter_mut().zip(g.data()) {
            *mi = beta1 * *mi + (1.0 - beta1) * gi;
        }
        let v = state.second_moment.get_mut(key)?;
        for (vi, &gi) in v.data_mut().iter_mut().zip(g.data()) {
            *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
        }
        let m = state.first_moment.get(key)?;
        let v = state.second_moment.get(key)?;
        for ((pi, &mi), &vi) in p.data_mut().iter_mut().zip(m.data()).zip(v.data()) {
            let m_hat = mi / c1;
            let v_hat = vi / c2;
            *pi -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok((params, state))
}

//! AdamW with global-norm clipping, and the target-network EMA.

use crate::encoder::EncoderParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub clip_norm: f64,
}

impl From<&super::TrainConfig> for AdamWConfig {
    fn from(c: &super::TrainConfig) -> Self {
        Self {
            beta1: c.beta1,
            beta2: c.beta2,
            eps: c.eps,
            weight_decay: c.weight_decay,
            clip_norm: c.clip_norm,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }
}

pub fn global_norm(g: &[f64]) -> f64 {
    g.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scales `g` in place so its norm is at most `max_norm`; returns the norm
/// before clipping.
pub fn clip_grad_norm(g: &mut [f64], max_norm: f64) -> f64 {
    let norm = global_norm(g);
    if norm > max_norm {
        let s = max_norm / norm;
        g.iter_mut().for_each(|x| *x *= s);
    }
    norm
}

/// Clips `grads`, then applies one bias-corrected AdamW step with decoupled
/// weight decay. A non-finite gradient leaves params and state untouched.
/// Returns the pre-clip gradient norm.
pub fn optimizer_update(
    grads: &mut [f64],
    params: &mut EncoderParams,
    state: &mut OptimizerState,
    lr: f64,
    cfg: &AdamWConfig,
) -> Result<f64> {
    assert_eq!(grads.len(), params.values.len());
    let norm = clip_grad_norm(grads, cfg.clip_norm);
    if !norm.is_finite() || grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient(norm));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (((w, &g), m), v) in params
        .values
        .iter_mut()
        .zip(grads.iter())
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *w -= lr * (m_hat / (v_hat.sqrt() + cfg.eps) + cfg.weight_decay * *w);
    }
    Ok(norm)
}

/// `θ' ← τ θ + (1 − τ) θ'`.
pub fn ema_update(online: &EncoderParams, target: &mut EncoderParams, tau: f64) {
    assert_eq!(online.values.len(), target.values.len());
    for (t, &o) in target.values.iter_mut().zip(&online.values) {
        *t = tau * o + (1.0 - tau) * *t;
    }
}

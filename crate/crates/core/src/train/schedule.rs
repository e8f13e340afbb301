//! Linear warm-up then linear decay to a floor; the temperature follows the
//! learning rate proportionally.

use super::config::TrainConfig;

pub fn learning_rate(step: u64, cfg: &TrainConfig) -> f64 {
    let lr0 = cfg.lr0;
    if step < cfg.warmup_steps {
        return lr0 * step as f64 / cfg.warmup_steps as f64;
    }
    let decay_len = cfg.total_steps.saturating_sub(cfg.warmup_steps);
    if decay_len == 0 {
        return lr0 * cfg.decay_floor_frac;
    }
    let frac = ((step - cfg.warmup_steps) as f64 / decay_len as f64).min(1.0);
    lr0 * (1.0 - (1.0 - cfg.decay_floor_frac) * frac)
}

/// `(lr, alpha)` at an update step.
pub fn schedules(step: u64, cfg: &TrainConfig) -> (f64, f64) {
    let lr = learning_rate(step, cfg);
    let alpha = if !cfg.anneal_alpha {
        cfg.alpha0
    } else if cfg.lr0 > 0.0 {
        cfg.alpha0 * lr / cfg.lr0
    } else {
        cfg.alpha0
    };
    (lr, alpha)
}

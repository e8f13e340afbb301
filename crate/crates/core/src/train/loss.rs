//! Mean squared TD error against fixed λ-return targets.

use crate::encoder::{EncoderParams, QModel};
use crate::env::Action;
use crate::error::{Error, Result};
use crate::qfunc::{PreparedTask, QTape, TapeAction};

use super::rollout::TrajectoryBatch;
use super::targets::compute_targets;

/// λ-return targets for every environment of the batch. Only rewards and
/// the recorded target-network values enter, so the result is independent of
/// the online parameters.
pub fn batch_targets(batch: &TrajectoryBatch, gamma: f64, lambda: f64) -> Result<Vec<Vec<f64>>> {
    batch
        .envs
        .iter()
        .map(|e| compute_targets(&e.rewards(), &e.values, &e.dones(), gamma, lambda))
        .collect()
}

/// `L = mean_{k,t} (Q_θ(s_t, a_t) - G_t)^2` and its gradient; the targets
/// are constants.
pub fn td_loss_and_grad(
    model: &QModel,
    params: &EncoderParams,
    tasks: &[PreparedTask],
    batch: &TrajectoryBatch,
    targets: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    if targets.len() != batch.envs.len() {
        return Err(Error::DimensionMismatch {
            expected: batch.envs.len(),
            got: targets.len(),
        });
    }
    let mut tape = QTape::new();
    let mut residuals = Vec::with_capacity(batch.num_pairs());
    for (env, g) in batch.envs.iter().zip(targets) {
        if g.len() != env.steps.len() {
            return Err(Error::DimensionMismatch {
                expected: env.steps.len(),
                got: g.len(),
            });
        }
        let task = &tasks[env.task];
        for (step, &target) in env.steps.iter().zip(g) {
            if !target.is_finite() {
                return Err(Error::Divergence(format!("non-finite target {target}")));
            }
            let sid = tape.state(model, params, &task.state_features(model, &step.selected_before));
            let action = match step.action {
                Action::Select(i) => TapeAction::Content(tape.content(model, params, &task.chunks[i - 1])),
                Action::Stop => TapeAction::Stop,
            };
            let q = tape.pair(model, params, sid, action, step.rho);
            residuals.push(q - target);
        }
    }
    if residuals.is_empty() {
        return Err(Error::EmptyActions);
    }
    let n = residuals.len() as f64;
    let loss = residuals.iter().map(|r| r * r).sum::<f64>() / n;
    let upstream: Vec<f64> = residuals.iter().map(|r| 2.0 * r / n).collect();
    let grads = tape.backward(model, params, &upstream)?;
    Ok((loss, grads))
}

//! Supervised baseline: per step, maximise the probability mass the softmax
//! over Q puts on the gold chunks that are still missing, and advance the
//! state with the best-scoring gold chunk.

use crate::encoder::{EncoderParams, QModel};
use crate::env::{Action, EnvConfig, EpisodeState};
use crate::error::Result;
use crate::qfunc::{action_positions, PreparedTask, QTape, TapeAction};

use super::policy::boltzmann_probs;

/// Mean negative log-likelihood over all supervised steps, and its gradient.
pub fn sft_loss_and_grad(
    model: &QModel,
    params: &EncoderParams,
    tasks: &[PreparedTask],
    env_cfg: EnvConfig,
    temperature: f64,
) -> Result<(f64, Vec<f64>)> {
    let mut grads = vec![0.0; model.param_count()];
    let mut total = 0.0;
    let mut n_steps = 0usize;
    // (tape, per-pair d loss / d Q) per task, scaled once the step count is known
    let mut pending: Vec<(QTape, Vec<f64>)> = Vec::new();
    for task in tasks {
        let gold = &task.instance.support_ids;
        if gold.is_empty() {
            continue;
        }
        let mut tape = QTape::new();
        let contents: Vec<_> = task
            .chunks
            .iter()
            .map(|fv| tape.content(model, params, fv))
            .collect();
        let mut upstream = Vec::new();
        let mut state = EpisodeState::reset_with(&task.instance, env_cfg)?;
        while !state.is_done() && !gold.iter().all(|g| state.selected().contains(g)) {
            let sid = tape.state(model, params, &task.state_features(model, state.selected()));
            let (actions, rhos) = action_positions(model, &state)?;
            let q: Vec<f64> = actions
                .iter()
                .zip(&rhos)
                .map(|(&a, &rho)| {
                    let ta = match a {
                        Action::Select(i) => TapeAction::Content(contents[i - 1]),
                        Action::Stop => TapeAction::Stop,
                    };
                    tape.pair(model, params, sid, ta, rho)
                })
                .collect();
            let p = boltzmann_probs(&q, temperature)?;
            let is_gold: Vec<bool> = actions
                .iter()
                .map(|a| matches!(a, Action::Select(i) if gold.contains(i)))
                .collect();
            let p_gold: f64 = p.iter().zip(&is_gold).filter(|(_, &g)| g).map(|(x, _)| x).sum();
            total -= p_gold.max(f64::MIN_POSITIVE).ln();
            n_steps += 1;
            for ((&pi, &g), _) in p.iter().zip(&is_gold).zip(&q) {
                let d_logit = pi - if g { pi / p_gold } else { 0.0 };
                upstream.push(d_logit / temperature);
            }
            let best_gold = (0..actions.len())
                .filter(|&i| is_gold[i])
                .max_by(|&a, &b| q[a].total_cmp(&q[b]).then(b.cmp(&a)))
                .expect("a gold chunk remains");
            state = state.step(&task.instance, actions[best_gold])?.state;
        }
        if !upstream.is_empty() {
            pending.push((tape, upstream));
        }
    }
    if n_steps == 0 {
        return Ok((0.0, grads));
    }
    let scale = 1.0 / n_steps as f64;
    for (tape, mut upstream) in pending {
        upstream.iter_mut().for_each(|u| *u *= scale);
        tape.backward_into(model, params, &upstream, &mut grads)?;
    }
    Ok((total * scale, grads))
}

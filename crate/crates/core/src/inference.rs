//! Retrieval with a trained critic: greedy, sampled and beam-search decoding,
//! plus set-overlap metrics against the support facts.

use std::collections::BTreeSet;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{EncoderParams, QModel};
use crate::env::{Action, EnvConfig, EpisodeState};
use crate::error::{Error, Result};
use crate::qfunc::{score_state, ContentCache, PreparedTask};
use crate::seeding::rng_for;
use crate::train::policy::{argmax, boltzmann_sample};
use crate::train::TaskSource;

/// A finished retrieval episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retrieval {
    /// Selected chunk ids in document order.
    pub selected: Vec<usize>,
    /// Actions in the order they were taken.
    pub actions: Vec<Action>,
    /// Sum of `Q_θ(s_t, a_t)` along the trajectory.
    pub score: f64,
}

/// Picks `argmax Q` at each step; ties go to the lowest doc index.
pub fn greedy_retrieve(
    model: &QModel,
    params: &EncoderParams,
    task: &PreparedTask,
    env_cfg: EnvConfig,
) -> Result<Retrieval> {
    let cache = ContentCache::build(model, params, task);
    let mut state = EpisodeState::reset_with(&task.instance, env_cfg)?;
    let (mut actions, mut score) = (Vec::new(), 0.0);
    while !state.is_done() {
        let scored = score_state(model, params, task, &cache, &state)?;
        let i = argmax(&scored.q).ok_or(Error::EmptyActions)?;
        score += scored.q[i];
        actions.push(scored.actions[i]);
        state = state.step(&task.instance, scored.actions[i])?.state;
    }
    Ok(Retrieval {
        selected: state.selected().to_vec(),
        actions,
        score,
    })
}

/// Samples from the Boltzmann policy at temperature `alpha`.
pub fn sampled_retrieve(
    model: &QModel,
    params: &EncoderParams,
    task: &PreparedTask,
    env_cfg: EnvConfig,
    alpha: f64,
    seed: u64,
) -> Result<Retrieval> {
    let mut rng = rng_for(seed, &[]);
    let cache = ContentCache::build(model, params, task);
    let mut state = EpisodeState::reset_with(&task.instance, env_cfg)?;
    let (mut actions, mut score) = (Vec::new(), 0.0);
    while !state.is_done() {
        let scored = score_state(model, params, task, &cache, &state)?;
        let (i, _) = boltzmann_sample(&scored.q, alpha, &mut rng)?;
        score += scored.q[i];
        actions.push(scored.actions[i]);
        state = state.step(&task.instance, scored.actions[i])?.state;
    }
    Ok(Retrieval {
        selected: state.selected().to_vec(),
        actions,
        score,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub width: usize,
    /// Cap the depth at the number of support facts.
    pub oracle_depth: bool,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            width: 4,
            oracle_depth: false,
        }
    }
}

#[derive(Debug, Clone)]
struct Beam {
    state: EpisodeState,
    actions: Vec<Action>,
    score: f64,
}

/// Upper bound on the number of distinct trajectories, saturating.
fn trajectory_count(m: usize, depth: usize, stop: bool) -> usize {
    (0..depth).fold(1usize, |acc, t| {
        let branch = m.saturating_sub(t) + usize::from(stop);
        acc.saturating_mul(branch.max(1))
    })
}

/// Beam search over cumulative Q. Each live beam proposes its top-`width`
/// actions, the best `width` partial trajectories survive, and beams that
/// stopped early keep competing with their final score.
pub fn beam_search(
    model: &QModel,
    params: &EncoderParams,
    task: &PreparedTask,
    env_cfg: EnvConfig,
    beam: BeamConfig,
) -> Result<Retrieval> {
    if beam.width == 0 {
        return Err(Error::Config("beam width must be at least 1".into()));
    }
    let mut env_cfg = env_cfg;
    if beam.oracle_depth {
        env_cfg.budget = env_cfg.budget.min(task.instance.support_ids.len()).max(1);
    }
    let m = task.num_chunks();
    let limit = trajectory_count(m, env_cfg.budget.min(m), env_cfg.stop_enabled);
    let width = if beam.width > limit {
        warn!("beam width {} exceeds the {limit} possible trajectories; clamping", beam.width);
        limit
    } else {
        beam.width
    };

    let cache = ContentCache::build(model, params, task);
    let mut beams = vec![Beam {
        state: EpisodeState::reset_with(&task.instance, env_cfg)?,
        actions: Vec::new(),
        score: 0.0,
    }];
    while beams.iter().any(|b| !b.state.is_done()) {
        let expansions: Vec<Vec<(f64, Action)>> = beams
            .par_iter()
            .map(|b| -> Result<Vec<(f64, Action)>> {
                if b.state.is_done() {
                    return Ok(Vec::new());
                }
                let scored = score_state(model, params, task, &cache, &b.state)?;
                let mut order: Vec<usize> = (0..scored.q.len()).collect();
                order.sort_by(|&x, &y| scored.q[y].total_cmp(&scored.q[x]));
                order.truncate(width);
                Ok(order.into_iter().map(|i| (scored.q[i], scored.actions[i])).collect())
            })
            .collect::<Result<_>>()?;

        let mut candidates: Vec<(f64, usize, Option<Action>)> = Vec::new();
        for (bi, (b, exp)) in beams.iter().zip(&expansions).enumerate() {
            if b.state.is_done() {
                candidates.push((b.score, bi, None));
            } else {
                candidates.extend(exp.iter().map(|&(q, a)| (b.score + q, bi, Some(a))));
            }
        }
        candidates.sort_by(|x, y| y.0.total_cmp(&x.0));
        candidates.truncate(width);
        beams = candidates
            .into_iter()
            .map(|(score, bi, action)| -> Result<Beam> {
                let parent = &beams[bi];
                match action {
                    None => Ok(parent.clone()),
                    Some(a) => {
                        let mut actions = parent.actions.clone();
                        actions.push(a);
                        Ok(Beam {
                            state: parent.state.step(&task.instance, a)?.state,
                            actions,
                            score,
                        })
                    }
                }
            })
            .collect::<Result<_>>()?;
    }
    let best = beams.into_iter().next().ok_or(Error::EmptyActions)?;
    Ok(Retrieval {
        selected: best.state.selected().to_vec(),
        actions: best.actions,
        score: best.score,
    })
}

/// Set-overlap metrics between retrieved and gold chunk ids.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RetrievalMetrics {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub em: f64,
}

pub fn evaluate_retrieval(predicted: &[usize], gold: &BTreeSet<usize>) -> RetrievalMetrics {
    let pred: BTreeSet<usize> = predicted.iter().copied().collect();
    let hit = pred.intersection(gold).count() as f64;
    let recall = if gold.is_empty() { 1.0 } else { hit / gold.len() as f64 };
    let precision = match (pred.is_empty(), gold.is_empty()) {
        (true, true) => 1.0,
        (true, false) => 0.0,
        _ => hit / pred.len() as f64,
    };
    let f1 = if recall + precision > 0.0 {
        2.0 * recall * precision / (recall + precision)
    } else {
        0.0
    };
    RetrievalMetrics {
        recall,
        precision,
        f1,
        em: if pred == *gold { 1.0 } else { 0.0 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum DecodeMode {
    Greedy,
    Beam(BeamConfig),
    Sampled { alpha: f64 },
}

pub fn retrieve(
    model: &QModel,
    params: &EncoderParams,
    task: &PreparedTask,
    env_cfg: EnvConfig,
    mode: DecodeMode,
    seed: u64,
) -> Result<Retrieval> {
    match mode {
        DecodeMode::Greedy => greedy_retrieve(model, params, task, env_cfg),
        DecodeMode::Beam(b) => beam_search(model, params, task, env_cfg, b),
        DecodeMode::Sampled { alpha } => sampled_retrieve(model, params, task, env_cfg, alpha, seed),
    }
}

/// Averages over a set of instances.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalSummary {
    pub n: usize,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub em: f64,
}

/// Draws one instance per seed from `source`, retrieves and averages the metrics.
pub fn evaluate(
    model: &QModel,
    params: &EncoderParams,
    source: &dyn TaskSource,
    seeds: &[u64],
    env_cfg: EnvConfig,
    mode: DecodeMode,
) -> Result<EvalSummary> {
    let rows: Vec<RetrievalMetrics> = seeds
        .par_iter()
        .map(|&s| {
            let task = PreparedTask::new(model, source.instance(s)?);
            let r = retrieve(model, params, &task, env_cfg, mode, s)?;
            Ok(evaluate_retrieval(&r.selected, &task.instance.support_ids))
        })
        .collect::<Result<_>>()?;
    let n = rows.len();
    if n == 0 {
        return Ok(EvalSummary::default());
    }
    let avg = |f: fn(&RetrievalMetrics) -> f64| rows.iter().map(f).sum::<f64>() / n as f64;
    Ok(EvalSummary {
        n,
        recall: avg(|r| r.recall),
        precision: avg(|r| r.precision),
        f1: avg(|r| r.f1),
        em: avg(|r| r.em),
    })
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gold(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    #[test]
    fn metrics_on_small_sets() {
        let r = evaluate_retrieval(&[1, 2], &gold(&[2, 3]));
        assert_eq!((r.precision, r.recall, r.f1, r.em), (0.5, 0.5, 0.5, 0.0));
        let r = evaluate_retrieval(&[3, 2], &gold(&[2, 3]));
        assert_eq!((r.f1, r.em), (1.0, 1.0));
        let r = evaluate_retrieval(&[], &gold(&[4]));
        assert_eq!(r.f1, 0.0);
    }

    #[test]
    fn mean_std_matches_hand_values() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(mean_std(&[5.0]), (5.0, 0.0));
    }

    #[test]
    fn trajectory_count_saturates() {
        assert_eq!(trajectory_count(5, 2, false), 20);
        assert_eq!(trajectory_count(5, 2, true), 30);
        assert_eq!(trajectory_count(1 << 40, 3, false), usize::MAX);
    }
}

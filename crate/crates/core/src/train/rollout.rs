//! On-policy episode collection across K parallel environments.

use rayon::prelude::*;

use crate::encoder::{EncoderParams, QModel};
use crate::env::{Action, EnvConfig, EpisodeState};
use crate::error::Result;
use crate::qfunc::{action_positions, ContentCache, PreparedTask};
use crate::rope;
use crate::seeding::rng_for;

use super::policy::{boltzmann_sample, epsilon_greedy, hard_value, soft_value};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exploration {
    /// Boltzmann policy with soft bootstrap values at temperature `alpha`.
    Soft { alpha: f64 },
    /// ε-greedy behaviour with `max Q` bootstrap values.
    Hard { epsilon: f64 },
}

/// One transition of one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// `s_t` as the sorted selected set before acting.
    pub selected_before: Vec<usize>,
    pub action: Action,
    /// Rotation position the action was scored at.
    pub rho: f64,
    pub reward: f64,
    pub done: bool,
    /// `Q_θ(s_t, a_t)` under the behaviour parameters.
    pub q_behavior: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvTrajectory {
    /// Index into the task slice the batch was collected on.
    pub task: usize,
    pub steps: Vec<StepRecord>,
    /// `values[t]` is the target-network value of the state at step `t`;
    /// `values.len() == steps.len() + 1` and terminal states are 0.
    pub values: Vec<f64>,
    pub final_selected: Vec<usize>,
}

impl EnvTrajectory {
    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    pub fn dones(&self) -> Vec<bool> {
        self.steps.iter().map(|s| s.done).collect()
    }

    pub fn episode_return(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    pub envs: Vec<EnvTrajectory>,
}

impl TrajectoryBatch {
    pub fn num_pairs(&self) -> usize {
        self.envs.iter().map(|e| e.steps.len()).sum()
    }

    pub fn mean_return(&self) -> f64 {
        if self.envs.is_empty() {
            return 0.0;
        }
        self.envs.iter().map(|e| e.episode_return()).sum::<f64>() / self.envs.len() as f64
    }
}

/// Runs one episode per task. The online parameters drive the policy and the
/// target parameters provide the bootstrap values. `seeds[k]` seeds the
/// action sampling of environment `k`, so results do not depend on how the
/// environments are scheduled across threads.
pub fn rollout(
    model: &QModel,
    tasks: &[PreparedTask],
    online: &EncoderParams,
    target: &EncoderParams,
    env_cfg: EnvConfig,
    exploration: Exploration,
    seeds: &[u64],
) -> Result<TrajectoryBatch> {
    assert_eq!(tasks.len(), seeds.len(), "one seed per environment");
    let envs = tasks
        .par_iter()
        .zip(seeds.par_iter())
        .enumerate()
        .map(|(k, (task, &seed))| run_episode(model, k, task, online, target, env_cfg, exploration, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryBatch { envs })
}

#[allow(clippy::too_many_arguments)]
fn run_episode(
    model: &QModel,
    k: usize,
    task: &PreparedTask,
    online: &EncoderParams,
    target: &EncoderParams,
    env_cfg: EnvConfig,
    exploration: Exploration,
    seed: u64,
) -> Result<EnvTrajectory> {
    let mut rng = rng_for(seed, &[]);
    let shared = std::ptr::eq(online, target);
    let cache = ContentCache::build(model, online, task);
    let target_cache = if shared {
        None
    } else {
        Some(ContentCache::build(model, target, task))
    };
    let freqs = model.freqs();

    let mut state = EpisodeState::reset_with(&task.instance, env_cfg)?;
    let mut steps = Vec::with_capacity(env_cfg.budget);
    let mut values = Vec::with_capacity(env_cfg.budget + 1);
    while !state.is_done() {
        let feats = task.state_features(model, state.selected());
        let s_vec = model.encode_state(online, &feats);
        let (actions, rhos) = action_positions(model, &state)?;
        let q: Vec<f64> = actions
            .iter()
            .zip(&rhos)
            .map(|(&a, &r)| rope::rotated_dot(&s_vec, cache.vector(a), r, freqs))
            .collect();
        let q_target = match &target_cache {
            None => q.clone(),
            Some(tc) => {
                let s_t = model.encode_state(target, &feats);
                actions
                    .iter()
                    .zip(&rhos)
                    .map(|(&a, &r)| rope::rotated_dot(&s_t, tc.vector(a), r, freqs))
                    .collect()
            }
        };
        let (idx, value) = match exploration {
            Exploration::Soft { alpha } => (
                boltzmann_sample(&q, alpha, &mut rng)?.0,
                soft_value(&q_target, alpha)?,
            ),
            Exploration::Hard { epsilon } => {
                (epsilon_greedy(&q, epsilon, &mut rng)?, hard_value(&q_target)?)
            }
        };
        values.push(value);
        let action = actions[idx];
        let tr = state.step(&task.instance, action)?;
        steps.push(StepRecord {
            selected_before: state.selected().to_vec(),
            action,
            rho: rhos[idx],
            reward: tr.reward,
            done: tr.done,
            q_behavior: q[idx],
        });
        state = tr.state;
    }
    values.push(0.0);
    Ok(EnvTrajectory {
        task: k,
        steps,
        values,
        final_selected: state.selected().to_vec(),
    })
}

/// Recomputes the bootstrap values of a recorded episode from the target
/// parameters alone by replaying its actions.
pub fn bootstrap_values(
    model: &QModel,
    target: &EncoderParams,
    task: &PreparedTask,
    steps: &[StepRecord],
    env_cfg: EnvConfig,
    exploration: Exploration,
) -> Result<Vec<f64>> {
    let cache = ContentCache::build(model, target, task);
    let mut state = EpisodeState::reset_with(&task.instance, env_cfg)?;
    let mut values = Vec::with_capacity(steps.len() + 1);
    for rec in steps {
        let q = crate::qfunc::score_state(model, target, task, &cache, &state)?.q;
        values.push(match exploration {
            Exploration::Soft { alpha } => soft_value(&q, alpha)?,
            Exploration::Hard { .. } => hard_value(&q)?,
        });
        state = state.step(&task.instance, rec.action)?.state;
    }
    values.push(0.0);
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::EncoderConfig;
    use crate::env::TaskInstance;
    use crate::features::FeatureConfig;
    use std::collections::HashSet;

    fn setup() -> (QModel, Vec<PreparedTask>) {
        let model = QModel::new(EncoderConfig {
            dim: 8,
            hidden: 8,
            features: FeatureConfig {
                buckets: 256,
                ..FeatureConfig::default()
            },
            ..EncoderConfig::default()
        })
        .unwrap();
        let tasks = (0..4)
            .map(|k| {
                let chunks = (0..12).map(|i| format!("sentence {i} of doc {k}")).collect();
                let inst = TaskInstance::new(format!("{k}"), "find it", chunks, [3, 9], "").unwrap();
                PreparedTask::new(&model, inst)
            })
            .collect();
        (model, tasks)
    }

    #[test]
    fn actions_never_repeat_and_budget_holds() {
        let (model, tasks) = setup();
        let p = model.init_params(1);
        let batch = rollout(
            &model,
            &tasks,
            &p,
            &p,
            EnvConfig::with_budget(5),
            Exploration::Soft { alpha: 1.0 },
            &[1, 2, 3, 4],
        )
        .unwrap();
        for env in &batch.envs {
            assert_eq!(env.steps.len(), 5);
            assert_eq!(env.values.len(), 6);
            assert_eq!(*env.values.last().unwrap(), 0.0);
            let picked: HashSet<_> = env.steps.iter().map(|s| s.action).collect();
            assert_eq!(picked.len(), 5);
            assert!(env.steps[..4].iter().all(|s| s.reward == 0.0 && !s.done));
            assert!(env.steps[4].done);
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let (model, tasks) = setup();
        let p = model.init_params(1);
        let t = model.init_params(2);
        let run = || {
            rollout(
                &model,
                &tasks,
                &p,
                &t,
                EnvConfig::with_budget(3),
                Exploration::Soft { alpha: 0.3 },
                &[9, 8, 7, 6],
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn values_come_from_target_parameters() {
        let (model, tasks) = setup();
        let online = model.init_params(1);
        let target = model.init_params(2);
        let batch = rollout(
            &model,
            &tasks[..1],
            &online,
            &target,
            EnvConfig::with_budget(2),
            Exploration::Soft { alpha: 0.5 },
            &[3],
        )
        .unwrap();
        let env = &batch.envs[0];
        let cache = ContentCache::build(&model, &target, &tasks[0]);
        let s0 = EpisodeState::reset(&tasks[0].instance, 2).unwrap();
        let scored = crate::qfunc::score_state(&model, &target, &tasks[0], &cache, &s0).unwrap();
        assert!((env.values[0] - soft_value(&scored.q, 0.5).unwrap()).abs() < 1e-12);
    }
}

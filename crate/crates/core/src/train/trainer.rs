//! One update step: roll out K environments per micro-batch, build λ-return
//! targets from the target network, take an AdamW step on the averaged TD
//! gradient and move the target network towards the online one.

use log::warn;
use rayon::prelude::*;

use crate::encoder::{EncoderParams, QModel};
use crate::env::TaskInstance;
use crate::error::{Error, Result};
use crate::qfunc::PreparedTask;
use crate::seeding::{derive_seed, NS_INIT, NS_ROLLOUT, NS_TRAIN};

use super::config::{Ablation, TrainConfig};
use super::loss::{batch_targets, td_loss_and_grad};
use super::optim::{ema_update, global_norm, optimizer_update, AdamWConfig, OptimizerState};
use super::rollout::{rollout, Exploration};
use super::schedule::schedules;
use super::sft::sft_loss_and_grad;

/// Produces a training instance from a seed.
pub trait TaskSource: Sync {
    fn instance(&self, seed: u64) -> Result<TaskInstance>;
}

impl<F> TaskSource for F
where
    F: Fn(u64) -> Result<TaskInstance> + Sync,
{
    fn instance(&self, seed: u64) -> Result<TaskInstance> {
        self(seed)
    }
}

/// Scalars reported for one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    /// Update index (0-based) this row describes.
    pub step: u64,
    pub loss: f64,
    pub mean_return: f64,
    /// Fraction of support chunks the behaviour policy collected.
    pub rollout_recall: f64,
    pub lr: f64,
    pub alpha: f64,
    /// Pre-clip gradient norm (0 when no step was taken).
    pub grad_norm: f64,
    /// The optimizer rejected a non-finite gradient.
    pub skipped: bool,
}

#[derive(Debug, Clone)]
pub struct Trainer {
    model: QModel,
    cfg: TrainConfig,
    online: EncoderParams,
    target: EncoderParams,
    opt: OptimizerState,
    step: u64,
    skipped_steps: u64,
}

impl Trainer {
    pub fn new(model: QModel, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let online = model.init_params(derive_seed(cfg.seed, &[NS_INIT]));
        let target = online.clone();
        let opt = OptimizerState::new(model.param_count());
        Ok(Self {
            model,
            cfg,
            online,
            target,
            opt,
            step: 0,
            skipped_steps: 0,
        })
    }

    /// Rebuilds a trainer from saved state.
    pub fn from_parts(
        model: QModel,
        cfg: TrainConfig,
        online: EncoderParams,
        target: EncoderParams,
        opt: OptimizerState,
        step: u64,
        skipped_steps: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        let n = model.param_count();
        if online.len() != n || target.len() != n || opt.m.len() != n || opt.v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: online.len(),
            });
        }
        Ok(Self {
            model,
            cfg,
            online,
            target,
            opt,
            step,
            skipped_steps,
        })
    }

    pub fn model(&self) -> &QModel {
        &self.model
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn params(&self) -> &EncoderParams {
        &self.online
    }

    pub fn target_params(&self) -> &EncoderParams {
        &self.target
    }

    pub fn optimizer(&self) -> &OptimizerState {
        &self.opt
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn skipped_steps(&self) -> u64 {
        self.skipped_steps
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.cfg.total_steps
    }

    fn prepare(&self, source: &dyn TaskSource, micro: usize) -> Result<Vec<PreparedTask>> {
        let seed = self.cfg.seed;
        let step = self.step;
        (0..self.cfg.num_envs)
            .into_par_iter()
            .map(|k| {
                let s = derive_seed(seed, &[NS_TRAIN, step, micro as u64, k as u64]);
                source
                    .instance(s)
                    .map(|inst| PreparedTask::new(&self.model, inst))
            })
            .collect()
    }

    fn exploration(&self, lr: f64, alpha: f64) -> Exploration {
        match self.cfg.ablation {
            Ablation::NoSoftQ => {
                let eps = if self.cfg.anneal_alpha && self.cfg.lr0 > 0.0 {
                    self.cfg.epsilon0 * lr / self.cfg.lr0
                } else {
                    self.cfg.epsilon0
                };
                Exploration::Hard { epsilon: eps }
            }
            _ => Exploration::Soft { alpha },
        }
    }

    /// Performs one update (or, for the no-fine-tuning baseline, only collects
    /// statistics).
    pub fn update(&mut self, source: &dyn TaskSource) -> Result<UpdateStats> {
        let (lr, alpha) = schedules(self.step, &self.cfg);
        let exploration = self.exploration(lr, alpha);
        let env_cfg = self.cfg.env_config();
        let accum = self.cfg.accum_steps;
        let mut grads = vec![0.0; self.model.param_count()];
        let (mut loss, mut ret, mut recall) = (0.0, 0.0, 0.0);

        for micro in 0..accum {
            let tasks = self.prepare(source, micro)?;
            let seeds: Vec<u64> = (0..tasks.len())
                .map(|k| derive_seed(self.cfg.seed, &[NS_ROLLOUT, self.step, micro as u64, k as u64]))
                .collect();
            let batch = rollout(
                &self.model,
                &tasks,
                &self.online,
                &self.target,
                env_cfg,
                exploration,
                &seeds,
            )?;
            ret += batch.mean_return();
            recall += batch
                .envs
                .iter()
                .map(|e| support_recall(&e.final_selected, &tasks[e.task].instance))
                .sum::<f64>()
                / batch.envs.len() as f64;

            let (l, g) = match self.cfg.ablation {
                Ablation::Sft => sft_loss_and_grad(
                    &self.model,
                    &self.online,
                    &tasks,
                    env_cfg,
                    self.cfg.sft_temperature,
                )?,
                _ => {
                    let targets = batch_targets(&batch, self.cfg.gamma, self.cfg.lambda)?;
                    td_loss_and_grad(&self.model, &self.online, &tasks, &batch, &targets)?
                }
            };
            loss += l;
            for (a, b) in grads.iter_mut().zip(&g) {
                *a += b / accum as f64;
            }
        }
        let k = accum as f64;
        let (loss, ret, recall) = (loss / k, ret / k, recall / k);
        if !loss.is_finite() {
            return Err(Error::Divergence(format!(
                "loss {loss} at update {}",
                self.step
            )));
        }

        let (grad_norm, skipped) = if self.cfg.ablation == Ablation::NoFt {
            (global_norm(&grads), false)
        } else {
            let adam = AdamWConfig::from(&self.cfg);
            let outcome = match optimizer_update(&mut grads, &mut self.online, &mut self.opt, lr, &adam) {
                Ok(n) => (n, false),
                Err(Error::NonFiniteGradient(n)) => {
                    self.skipped_steps += 1;
                    warn!(
                        "skipping update {}: non-finite gradient (total skipped {})",
                        self.step, self.skipped_steps
                    );
                    (n, true)
                }
                Err(e) => return Err(e),
            };
            if self.cfg.ablation == Ablation::NoTarget {
                self.target.values.copy_from_slice(&self.online.values);
            } else {
                ema_update(&self.online, &mut self.target, self.cfg.tau);
            }
            outcome
        };

        let stats = UpdateStats {
            step: self.step,
            loss,
            mean_return: ret,
            rollout_recall: recall,
            lr,
            alpha,
            grad_norm,
            skipped,
        };
        self.step += 1;
        Ok(stats)
    }
}

/// `|selected ∩ support| / |support|`, 1 for an empty support set.
pub fn support_recall(selected: &[usize], instance: &TaskInstance) -> f64 {
    let gold = &instance.support_ids;
    if gold.is_empty() {
        return 1.0;
    }
    selected.iter().filter(|i| gold.contains(i)).count() as f64 / gold.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::EncoderConfig;
    use crate::features::FeatureConfig;

    fn source(seed: u64) -> Result<TaskInstance> {
        let chunks = (0..6).map(|i| format!("item {} tag {}", i, (seed + i) % 3)).collect();
        TaskInstance::new("t", "find item 2", chunks, [3], "")
    }

    fn trainer(ablation: Ablation) -> Trainer {
        let model = QModel::new(EncoderConfig {
            dim: 8,
            hidden: 8,
            features: FeatureConfig {
                buckets: 128,
                ..FeatureConfig::default()
            },
            ..EncoderConfig::default()
        })
        .unwrap();
        let cfg = TrainConfig {
            num_envs: 4,
            budget: 2,
            total_steps: 20,
            warmup_steps: 2,
            ablation,
            ..TrainConfig::desk()
        };
        Trainer::new(model, cfg).unwrap()
    }

    #[test]
    fn no_ft_takes_no_optimizer_steps() {
        let mut t = trainer(Ablation::NoFt);
        let before = t.params().clone();
        for _ in 0..5 {
            t.update(&source).unwrap();
        }
        assert_eq!(t.params(), &before);
        assert_eq!(t.optimizer().step, 0);
        assert_eq!(t.step(), 5);
    }

    #[test]
    fn updates_are_deterministic() {
        let run = || {
            let mut t = trainer(Ablation::None);
            let stats: Vec<_> = (0..4).map(|_| t.update(&source).unwrap()).collect();
            (stats, t.params().clone())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn no_target_keeps_target_equal() {
        let mut t = trainer(Ablation::NoTarget);
        for _ in 0..4 {
            t.update(&source).unwrap();
        }
        assert_eq!(t.params(), t.target_params());
        let mut t = trainer(Ablation::None);
        for _ in 0..4 {
            t.update(&source).unwrap();
        }
        assert_ne!(t.params(), t.target_params());
    }

    #[test]
    fn every_ablation_runs() {
        for a in [Ablation::NoSoftQ, Ablation::Sft] {
            let mut t = trainer(a);
            for _ in 0..3 {
                let s = t.update(&source).unwrap();
                assert!(s.loss.is_finite());
            }
        }
    }

    #[test]
    fn recall_counts_support() {
        let inst = TaskInstance::new("t", "q", vec!["a".into(), "b".into(), "c".into()], [1, 3], "").unwrap();
        assert_eq!(support_recall(&[1, 2], &inst), 0.5);
        assert_eq!(support_recall(&[1, 3], &inst), 1.0);
    }
}

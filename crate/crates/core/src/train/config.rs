use serde::{Deserialize, Serialize};

use crate::env::{EnvConfig, RewardTiming};
use crate::error::{Error, Result};

/// Training variants used for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    #[default]
    None,
    /// The target network tracks the online network exactly (`θ' := θ`).
    NoTarget,
    /// Hard max bootstrap values with ε-greedy exploration.
    NoSoftQ,
    /// Supervised cross-entropy on gold support chunks instead of RL.
    Sft,
    /// No optimisation at all; the initial encoders are evaluated as is.
    NoFt,
}

impl std::str::FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "no_target" => Ok(Self::NoTarget),
            "no_soft_q" => Ok(Self::NoSoftQ),
            "sft" => Ok(Self::Sft),
            "no_ft" => Ok(Self::NoFt),
            other => Err(Error::Config(format!("unknown ablation mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub gamma: f64,
    /// Initial temperature; annealed in proportion to the learning rate.
    pub alpha0: f64,
    pub anneal_alpha: bool,
    pub lambda: f64,
    /// Target-network EMA rate.
    pub tau: f64,
    /// Parallel environments per micro-batch (the mini-batch size).
    pub num_envs: usize,
    /// Retrieval budget T.
    pub budget: usize,
    pub stop_enabled: bool,
    pub reward_timing: RewardTiming,
    pub lr0: f64,
    pub warmup_steps: u64,
    pub total_steps: u64,
    /// The learning rate decays linearly to `decay_floor_frac * lr0`.
    pub decay_floor_frac: f64,
    pub clip_norm: f64,
    /// Micro-batches averaged into one update.
    pub accum_steps: usize,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Initial ε for the hard-max ablation, annealed like the temperature.
    pub epsilon0: f64,
    /// Softmax temperature of the supervised baseline.
    pub sft_temperature: f64,
    pub ablation: Ablation,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl TrainConfig {
    /// Optimiser, schedule and objective settings used for fine-tuning
    /// pretrained transformer embedders.
    pub fn finetune() -> Self {
        Self {
            gamma: 0.99,
            alpha0: 0.05,
            anneal_alpha: true,
            lambda: 0.5,
            tau: 0.02,
            num_envs: 12,
            budget: 3,
            stop_enabled: false,
            reward_timing: RewardTiming::AtHorizon,
            lr0: 1.5e-5,
            warmup_steps: 1000,
            total_steps: 10_000,
            decay_floor_frac: 0.1,
            clip_norm: 2.0,
            accum_steps: 8,
            weight_decay: 5e-4,
            beta1: 0.9,
            beta2: 0.98,
            eps: 1e-6,
            epsilon0: 0.1,
            sft_temperature: 1.0,
            ablation: Ablation::None,
            seed: 0,
        }
    }

    /// Settings for the small from-scratch hashed encoders: a much larger
    /// learning rate, a shorter schedule and no accumulation. Shorter
    /// warm-ups let some seeds wash out the initial similarity prior before
    /// any reward arrives.
    pub fn desk() -> Self {
        Self {
            num_envs: 16,
            lr0: 3e-4,
            warmup_steps: 500,
            total_steps: 4000,
            accum_steps: 1,
            ..Self::finetune()
        }
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            budget: self.budget,
            stop_enabled: self.stop_enabled,
            reward_timing: self.reward_timing,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must lie in [0, 1]");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if !(self.alpha0 > 0.0) {
            return bad("alpha0 must be positive");
        }
        if self.num_envs == 0 || self.budget == 0 || self.accum_steps == 0 {
            return bad("num_envs, budget and accum_steps must be positive");
        }
        if self.warmup_steps > self.total_steps {
            return bad("warmup_steps exceeds total_steps");
        }
        if !(self.lr0 >= 0.0) || !(self.clip_norm > 0.0) {
            return bad("lr0 must be non-negative and clip_norm positive");
        }
        if !(0.0..=1.0).contains(&self.decay_floor_frac) {
            return bad("decay_floor_frac must lie in [0, 1]");
        }
        Ok(())
    }
}

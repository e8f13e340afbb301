//! Soft Q-learning with λ-returns, a target network and no replay buffer.

pub mod config;
pub mod loss;
pub mod optim;
pub mod policy;
pub mod rollout;
pub mod schedule;
pub mod sft;
pub mod targets;
pub mod trainer;

pub use config::{Ablation, TrainConfig};
pub use optim::{ema_update, OptimizerState};
pub use policy::{boltzmann_sample, soft_value};
pub use rollout::{bootstrap_values, rollout, EnvTrajectory, Exploration, StepRecord, TrajectoryBatch};
pub use schedule::schedules;
pub use targets::compute_targets;
pub use trainer::{support_recall, TaskSource, Trainer, UpdateStats};

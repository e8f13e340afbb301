//! Multi-step chunk retrieval trained with soft Q-learning.
//!
//! A retrieval agent walks a long context chunk by chunk. States (the query
//! plus already-selected chunks) and actions (candidate chunks) are embedded by
//! two encoders; the critic is their inner product after rotating the action
//! embedding by the chunk's (relative) position. Training follows an
//! on-policy, replay-free soft Q-learning loop with λ-return targets computed
//! from a slowly tracking target network.

pub mod checkpoint;
pub mod encoder;
pub mod env;
pub mod error;
pub mod features;
pub mod inference;
pub mod qfunc;
pub mod relpos;
pub mod rope;
pub mod seeding;
pub mod taskgen;
pub mod train;

pub use encoder::{EncoderConfig, EncoderParams, PositionMode, QModel};
pub use env::{Action, Chunk, EnvConfig, EpisodeState, RewardTiming, TaskInstance};
pub use error::{Error, Result};

//! Run configuration: a TOML file whose values can be overridden by flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use qrag_core::inference::{BeamConfig, DecodeMode};
use qrag_core::taskgen::{load_jsonl, FactChainSpec, JsonlSource, NiahSpec, TaskSpec};
use qrag_core::train::{Ablation, TaskSource, TrainConfig};
use qrag_core::EncoderConfig;

use crate::UsageError;

/// Where instances come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TaskConfig {
    Niah(NiahSpec),
    FactChain(FactChainSpec),
    /// A pre-chunked dataset; `eval_path` holds the held-out split.
    Jsonl {
        path: PathBuf,
        #[serde(default)]
        eval_path: Option<PathBuf>,
    },
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self::FactChain(FactChainSpec::default())
    }
}

/// A loaded task: a generator, or a fixed list of instances.
pub enum Task {
    Generated(TaskSpec),
    Dataset { train: JsonlSource, eval: JsonlSource },
}

impl TaskConfig {
    pub fn load(&self) -> anyhow::Result<Task> {
        Ok(match self {
            Self::Niah(s) => Task::Generated(TaskSpec::Niah(s.clone())),
            Self::FactChain(s) => Task::Generated(TaskSpec::FactChain(s.clone())),
            Self::Jsonl { path, eval_path } => {
                let train = JsonlSource::new(load_jsonl(path)?)?;
                let eval = match eval_path {
                    Some(p) => JsonlSource::new(load_jsonl(p)?)?,
                    None => train.clone(),
                };
                Task::Dataset { train, eval }
            }
        })
    }
}

impl Task {
    pub fn train_source(&self) -> &dyn TaskSource {
        match self {
            Self::Generated(spec) => spec,
            Self::Dataset { train, .. } => train,
        }
    }

    pub fn train_length(&self) -> Option<usize> {
        match self {
            Self::Generated(spec) => Some(spec.num_chunks()),
            Self::Dataset { .. } => None,
        }
    }
}

/// Decoding used for evaluation: `greedy` or `beam:k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMode(pub DecodeMode);

impl FromStr for EvalMode {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "greedy" {
            return Ok(Self(DecodeMode::Greedy));
        }
        if let Some(k) = s.strip_prefix("beam:") {
            let width: usize = k
                .parse()
                .map_err(|_| UsageError(format!("bad beam width in {s:?}")))?;
            if width == 0 {
                return Err(UsageError("beam width must be at least 1".into()));
            }
            return Ok(Self(DecodeMode::Beam(BeamConfig {
                width,
                oracle_depth: false,
            })));
        }
        Err(UsageError(format!("unknown eval mode {s:?}; use greedy or beam:k")))
    }
}

impl std::fmt::Display for EvalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            DecodeMode::Greedy => write!(f, "greedy"),
            DecodeMode::Beam(b) => write!(f, "beam:{}", b.width),
            DecodeMode::Sampled { alpha } => write!(f, "sampled:{alpha}"),
        }
    }
}

impl Serialize for EvalMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for EvalMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Context lengths to evaluate at (ignored for JSONL tasks).
    pub lengths: Vec<usize>,
    /// Independent evaluation seeds; metrics are reported as mean ± std over them.
    pub seeds: u64,
    /// Instances per seed and length.
    pub instances: u64,
    /// Evaluate every this many updates during training (0: only at the end).
    pub interval: u64,
    pub mode: EvalMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            lengths: Vec::new(),
            seeds: 3,
            instances: 100,
            interval: 0,
            mode: EvalMode(DecodeMode::Greedy),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Write `ckpt_{step}` every this many updates (0: final checkpoint only).
    pub checkpoint_every: u64,
    pub ablation: Ablation,
    pub task: TaskConfig,
    pub train: TrainConfig,
    pub encoder: EncoderConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("runs/default"),
            checkpoint_every: 1000,
            ablation: Ablation::None,
            task: TaskConfig::default(),
            train: TrainConfig::desk(),
            encoder: EncoderConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| UsageError(format!("invalid config: {e}")).into())
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Training settings with the run-level seed and ablation applied.
    pub fn resolved_train(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ablation: self.ablation,
            ..self.train.clone()
        }
    }

    /// Evaluation lengths, defaulting to the training length.
    pub fn eval_lengths(&self, task: &Task) -> Vec<usize> {
        if !self.eval.lengths.is_empty() {
            return self.eval.lengths.clone();
        }
        task.train_length().into_iter().collect()
    }
}

/// Parses `64,256,1024`.
pub fn parse_lengths(s: &str) -> Result<Vec<usize>, UsageError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| UsageError(format!("bad length {p:?} in {s:?}")))
        })
        .collect()
}

//! Synthetic long-context retrieval tasks and JSONL ingestion.
//!
//! Generators are pure functions of their spec (including the seed). Growing
//! `num_chunks` only adds filler; the number of needles or facts is fixed, so
//! a model trained on short contexts can be evaluated on long ones.

pub mod fact_chain;
pub mod jsonl;
pub mod niah;
mod text;

use serde::{Deserialize, Serialize};

use crate::env::TaskInstance;
use crate::error::Result;
use crate::train::TaskSource;

pub use fact_chain::{gen_fact_chain, FactChainSpec};
pub use jsonl::{load_jsonl, read_jsonl, to_json_line, write_jsonl, JsonlSource};
pub use niah::{gen_niah, NiahKind, NiahSpec};

/// How much surface vocabulary filler shares with the facts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillerStyle {
    /// Filler never mentions entities, locations or keys.
    #[default]
    Plain,
    /// About half of the filler sentences mention a location or key word.
    Confusable,
}

/// A generator family; the seed inside is replaced per instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TaskSpec {
    Niah(NiahSpec),
    FactChain(FactChainSpec),
}

impl TaskSpec {
    pub fn num_chunks(&self) -> usize {
        match self {
            Self::Niah(s) => s.num_chunks,
            Self::FactChain(s) => s.num_chunks,
        }
    }

    pub fn with_num_chunks(&self, m: usize) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::Niah(s) => s.num_chunks = m,
            Self::FactChain(s) => s.num_chunks = m,
        }
        out
    }

    pub fn generate(&self, seed: u64) -> Result<TaskInstance> {
        match self {
            Self::Niah(s) => gen_niah(&NiahSpec { seed, ..s.clone() }),
            Self::FactChain(s) => gen_fact_chain(&FactChainSpec { seed, ..s.clone() }),
        }
    }
}

impl TaskSource for TaskSpec {
    fn instance(&self, seed: u64) -> Result<TaskInstance> {
        self.generate(seed)
    }
}

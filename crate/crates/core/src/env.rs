//! The multi-step retrieval MDP.
//!
//! A context is a list of chunks in document order. An episode starts from the
//! query alone; every `Select` moves one chunk from the remaining set into the
//! state, which is kept sorted by document index. The reward is sparse: `1.0`
//! on the terminal transition iff every support chunk was selected.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    /// 1-based position in document order.
    pub doc_index: usize,
    pub text: String,
    pub is_support: bool,
}

/// A context, a query, the support chunk indices and the (unused) answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: String,
    pub query: String,
    pub context: Vec<Chunk>,
    pub support_ids: BTreeSet<usize>,
    pub answer: String,
    /// Unknown fields carried over from ingested records.
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl TaskInstance {
    /// Builds an instance from chunk texts in document order, re-indexing them `1..=m`.
    pub fn new(
        id: impl Into<String>,
        query: impl Into<String>,
        chunks: Vec<String>,
        support_ids: impl IntoIterator<Item = usize>,
        answer: impl Into<String>,
    ) -> Result<Self> {
        let support_ids: BTreeSet<usize> = support_ids.into_iter().collect();
        let context = chunks
            .into_iter()
            .enumerate()
            .map(|(i, text)| Chunk {
                doc_index: i + 1,
                is_support: support_ids.contains(&(i + 1)),
                text,
            })
            .collect();
        let inst = Self {
            id: id.into(),
            query: query.into(),
            context,
            support_ids,
            answer: answer.into(),
            extra: serde_json::Map::new(),
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn num_chunks(&self) -> usize {
        self.context.len()
    }

    pub fn chunk(&self, doc_index: usize) -> Option<&Chunk> {
        doc_index.checked_sub(1).and_then(|i| self.context.get(i))
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.context.len();
        if m == 0 {
            return Err(Error::InvalidInstance("empty context".into()));
        }
        for (i, c) in self.context.iter().enumerate() {
            if c.doc_index != i + 1 {
                return Err(Error::InvalidInstance(format!(
                    "chunk at position {} has doc_index {}",
                    i + 1,
                    c.doc_index
                )));
            }
            if c.is_support != self.support_ids.contains(&c.doc_index) {
                return Err(Error::InvalidInstance(format!(
                    "support flag of chunk {} disagrees with support_ids",
                    c.doc_index
                )));
            }
        }
        if let Some(&bad) = self.support_ids.iter().find(|&&s| s == 0 || s > m) {
            return Err(Error::OutOfRange { index: bad, max: m });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Select(usize),
    Stop,
}

/// When the sparse reward is granted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardTiming {
    /// Only when the episode ends (budget, exhaustion or Stop).
    #[default]
    AtHorizon,
    /// The episode also ends as soon as every support chunk is selected.
    AtCollection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnvConfig {
    pub budget: usize,
    pub stop_enabled: bool,
    pub reward_timing: RewardTiming,
}

impl EnvConfig {
    pub fn with_budget(budget: usize) -> Self {
        Self {
            budget,
            stop_enabled: false,
            reward_timing: RewardTiming::AtHorizon,
        }
    }
}

/// `s_t`: the query plus the selected chunks in document order.
///
/// The remaining action set is the complement of `selected` in `1..=m`, so it
/// is not materialised; this keeps states cheap to clone for million-chunk
/// contexts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EpisodeState {
    num_chunks: usize,
    selected: Vec<usize>,
    step: usize,
    done: bool,
    config: EnvConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: EpisodeState,
    pub reward: f64,
    pub done: bool,
}

impl EpisodeState {
    pub fn reset(instance: &TaskInstance, budget: usize) -> Result<Self> {
        Self::reset_with(instance, EnvConfig::with_budget(budget))
    }

    pub fn reset_with(instance: &TaskInstance, config: EnvConfig) -> Result<Self> {
        if config.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        instance.validate()?;
        Ok(Self {
            num_chunks: instance.num_chunks(),
            selected: Vec::new(),
            step: 0,
            done: false,
            config,
        })
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn budget(&self) -> usize {
        self.config.budget
    }

    pub fn config(&self) -> EnvConfig {
        self.config
    }

    pub fn num_chunks(&self) -> usize {
        self.num_chunks
    }

    pub fn is_remaining(&self, doc_index: usize) -> bool {
        doc_index >= 1
            && doc_index <= self.num_chunks
            && self.selected.binary_search(&doc_index).is_err()
    }

    pub fn remaining_len(&self) -> usize {
        self.num_chunks - self.selected.len()
    }

    /// Remaining doc indices in ascending order.
    pub fn remaining(&self) -> impl Iterator<Item = usize> + '_ {
        let mut sel = self.selected.iter().peekable();
        (1..=self.num_chunks).filter(move |i| {
            while sel.peek().is_some_and(|&&s| s < *i) {
                sel.next();
            }
            sel.peek() != Some(&i)
        })
    }

    /// Legal actions in canonical order: remaining selects ascending, then Stop.
    pub fn legal_actions(&self) -> Vec<Action> {
        let mut actions: Vec<Action> = self.remaining().map(Action::Select).collect();
        if self.config.stop_enabled {
            actions.push(Action::Stop);
        }
        actions
    }

    pub fn step(&self, instance: &TaskInstance, action: Action) -> Result<Transition> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let mut next = self.clone();
        match action {
            Action::Stop => {
                if !self.config.stop_enabled {
                    return Err(Error::InvalidAction("stop is disabled".into()));
                }
                next.done = true;
            }
            Action::Select(i) => {
                if !self.is_remaining(i) {
                    return Err(Error::InvalidAction(format!(
                        "chunk {i} is not in the remaining set"
                    )));
                }
                let pos = next.selected.binary_search(&i).unwrap_err();
                next.selected.insert(pos, i);
                next.step += 1;
                next.done = next.step >= self.config.budget || next.remaining_len() == 0;
                if self.config.reward_timing == RewardTiming::AtCollection
                    && contains_all(&next.selected, &instance.support_ids)
                {
                    next.done = true;
                }
            }
        }
        let reward = if next.done {
            terminal_reward(&next, &instance.support_ids)
        } else {
            0.0
        };
        let done = next.done;
        Ok(Transition {
            state: next,
            reward,
            done,
        })
    }
}

fn contains_all(sorted: &[usize], required: &BTreeSet<usize>) -> bool {
    required.iter().all(|r| sorted.binary_search(r).is_ok())
}

/// `1.0` iff every support index is among the selected chunks.
pub fn terminal_reward(state: &EpisodeState, support_ids: &BTreeSet<usize>) -> f64 {
    if contains_all(&state.selected, support_ids) {
        1.0
    } else {
        0.0
    }
}

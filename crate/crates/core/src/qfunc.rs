//! The factorised critic `Q(s, a_i) = <E_s(s), R_rho(i) E_a(c_i)>`.
//!
//! Content embeddings do not depend on the state, so they are computed once
//! per episode ([`ContentCache`]) and only rotated per step. [`QTape`]
//! records forward passes for the pairs that enter a loss and replays them
//! backwards to produce exact parameter gradients.

use rayon::prelude::*;

use crate::encoder::{EncoderParams, PositionMode, QModel, Tower, TowerCache};
use crate::env::{Action, EpisodeState, TaskInstance};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::relpos::RelPosMap;
use crate::rope;

/// Above this many chunks, featurizing and encoding run on the rayon pool.
const PAR_THRESHOLD: usize = 512;

/// `Q_i = <state_vec, R_{rho_i} content_i>`.
pub fn q_scores(
    state_vec: &[f64],
    content_vecs: &[&[f64]],
    rhos: &[f64],
    freqs: &[f64],
) -> Result<Vec<f64>> {
    if content_vecs.len() != rhos.len() {
        return Err(Error::DimensionMismatch {
            expected: content_vecs.len(),
            got: rhos.len(),
        });
    }
    if content_vecs.is_empty() {
        return Err(Error::EmptyActions);
    }
    if state_vec.len() != 2 * freqs.len() {
        return Err(Error::DimensionMismatch {
            expected: 2 * freqs.len(),
            got: state_vec.len(),
        });
    }
    content_vecs
        .iter()
        .zip(rhos)
        .map(|(c, &rho)| {
            if c.len() != state_vec.len() {
                return Err(Error::DimensionMismatch {
                    expected: state_vec.len(),
                    got: c.len(),
                });
            }
            Ok(rope::rotated_dot(state_vec, c, rho, freqs))
        })
        .collect()
}

/// An instance with its query and chunk features precomputed.
#[derive(Debug, Clone)]
pub struct PreparedTask {
    pub instance: TaskInstance,
    pub query: FeatureVector,
    pub chunks: Vec<FeatureVector>,
}

impl PreparedTask {
    pub fn new(model: &QModel, instance: TaskInstance) -> Self {
        let fz = model.featurizer();
        let chunks = if instance.num_chunks() >= PAR_THRESHOLD {
            instance
                .context
                .par_iter()
                .map(|c| fz.featurize_chunk(&c.text))
                .collect()
        } else {
            instance
                .context
                .iter()
                .map(|c| fz.featurize_chunk(&c.text))
                .collect()
        };
        Self {
            query: fz.featurize(&instance.query),
            chunks,
            instance,
        }
    }

    pub fn num_chunks(&self) -> usize {
        self.chunks.len()
    }

    pub fn state_features(&self, model: &QModel, selected: &[usize]) -> FeatureVector {
        model
            .featurizer()
            .state_features(&self.query, selected.iter().map(|&i| &self.chunks[i - 1]))
    }
}

/// Content embeddings of every chunk plus the Stop vector, for one parameter set.
#[derive(Debug, Clone)]
pub struct ContentCache {
    dim: usize,
    vecs: Vec<f64>,
    stop: Vec<f64>,
}

impl ContentCache {
    pub fn build(model: &QModel, params: &EncoderParams, task: &PreparedTask) -> Self {
        let dim = model.dim();
        let enc = |fv: &FeatureVector| model.encode_content(params, fv);
        let rows: Vec<Vec<f64>> = if task.num_chunks() >= PAR_THRESHOLD {
            task.chunks.par_iter().map(enc).collect()
        } else {
            task.chunks.iter().map(enc).collect()
        };
        Self {
            dim,
            vecs: rows.concat(),
            stop: model.stop_vec(params).to_vec(),
        }
    }

    pub fn content(&self, doc_index: usize) -> &[f64] {
        &self.vecs[(doc_index - 1) * self.dim..doc_index * self.dim]
    }

    pub fn stop(&self) -> &[f64] {
        &self.stop
    }

    pub fn vector(&self, action: Action) -> &[f64] {
        match action {
            Action::Select(i) => self.content(i),
            Action::Stop => &self.stop,
        }
    }
}

/// Rotation positions of every legal action in `state`, in canonical order.
/// Stop always sits at position 0.
pub fn action_positions(model: &QModel, state: &EpisodeState) -> Result<(Vec<Action>, Vec<f64>)> {
    let remaining: Vec<usize> = state.remaining().collect();
    let mut rhos = match model.config().position {
        PositionMode::Absolute => remaining.iter().map(|&i| i as f64).collect(),
        PositionMode::Relative => {
            let cfg = model.config();
            RelPosMap::new(state.selected(), state.num_chunks(), cfg.delta, cfg.ell)?
                .rhos_sorted(remaining.iter().copied())?
        }
    };
    let mut actions: Vec<Action> = remaining.into_iter().map(Action::Select).collect();
    if state.config().stop_enabled {
        actions.push(Action::Stop);
        rhos.push(0.0);
    }
    Ok((actions, rhos))
}

/// Q-values of all legal actions in a state.
#[derive(Debug, Clone)]
pub struct Scored {
    pub actions: Vec<Action>,
    pub rhos: Vec<f64>,
    pub q: Vec<f64>,
}

/// Scores every legal action of `state` from cached content vectors.
pub fn score_state(
    model: &QModel,
    params: &EncoderParams,
    task: &PreparedTask,
    cache: &ContentCache,
    state: &EpisodeState,
) -> Result<Scored> {
    let state_vec = model.encode_state(params, &task.state_features(model, state.selected()));
    score_with_state_vec(model, cache, state, &state_vec)
}

pub fn score_with_state_vec(
    model: &QModel,
    cache: &ContentCache,
    state: &EpisodeState,
    state_vec: &[f64],
) -> Result<Scored> {
    let (actions, rhos) = action_positions(model, state)?;
    if actions.is_empty() {
        return Err(Error::EmptyActions);
    }
    let freqs = model.freqs();
    let q = actions
        .iter()
        .zip(&rhos)
        .map(|(&a, &rho)| rope::rotated_dot(state_vec, cache.vector(a), rho, freqs))
        .collect();
    Ok(Scored { actions, rhos, q })
}

/// Reference path: re-encodes the state and the candidate from raw text and
/// bakes the position in before the dot product. No caching involved.
pub fn q_reencoded(
    model: &QModel,
    params: &EncoderParams,
    instance: &TaskInstance,
    state: &EpisodeState,
    action: Action,
) -> Result<f64> {
    let fz = model.featurizer();
    let query = fz.featurize(&instance.query);
    let sel: Vec<FeatureVector> = state
        .selected()
        .iter()
        .map(|&i| fz.featurize_chunk(&instance.context[i - 1].text))
        .collect();
    let s = model.encode_state(params, &fz.state_features(&query, sel.iter()));
    let (content, rho) = match action {
        Action::Stop => (model.stop_vec(params).to_vec(), 0.0),
        Action::Select(i) => {
            if !state.is_remaining(i) {
                return Err(Error::InvalidAction(format!("chunk {i} is not remaining")));
            }
            let rho = match model.config().position {
                PositionMode::Absolute => i as f64,
                PositionMode::Relative => {
                    let cfg = model.config();
                    RelPosMap::new(state.selected(), state.num_chunks(), cfg.delta, cfg.ell)?
                        .rho(i)?
                }
            };
            let fv = fz.featurize_chunk(&instance.context[i - 1].text);
            (model.encode_content(params, &fv), rho)
        }
    };
    let rotated = rope::rope(&content, rho, model.freqs())?;
    Ok(s.iter().zip(&rotated).map(|(a, b)| a * b).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContentId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TapeAction {
    Content(ContentId),
    Stop,
}

#[derive(Debug, Clone)]
struct Pair {
    state: StateId,
    action: TapeAction,
    rho: f64,
}

/// Recorded forward passes of the critic for a set of (state, action) pairs.
#[derive(Debug, Clone, Default)]
pub struct QTape {
    states: Vec<(FeatureVector, TowerCache)>,
    contents: Vec<(FeatureVector, TowerCache)>,
    pairs: Vec<Pair>,
}

impl QTape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn state(&mut self, model: &QModel, params: &EncoderParams, feats: &FeatureVector) -> StateId {
        let cache = model.tower_forward(params, Tower::State, feats);
        self.states.push((feats.clone(), cache));
        StateId(self.states.len() - 1)
    }

    pub fn content(&mut self, model: &QModel, params: &EncoderParams, feats: &FeatureVector) -> ContentId {
        let cache = model.tower_forward(params, Tower::Action, feats);
        self.contents.push((feats.clone(), cache));
        ContentId(self.contents.len() - 1)
    }

    pub fn state_vec(&self, id: StateId) -> &[f64] {
        &self.states[id.0].1.out
    }

    pub fn content_vec(&self, id: ContentId) -> &[f64] {
        &self.contents[id.0].1.out
    }

    /// Records the pair and returns its Q-value.
    pub fn pair(
        &mut self,
        model: &QModel,
        params: &EncoderParams,
        state: StateId,
        action: TapeAction,
        rho: f64,
    ) -> f64 {
        let s = &self.states[state.0].1.out;
        let (c, rho) = match action {
            TapeAction::Content(id) => (self.contents[id.0].1.out.as_slice(), rho),
            TapeAction::Stop => (model.stop_vec(params), 0.0),
        };
        let q = rope::rotated_dot(s, c, rho, model.freqs());
        self.pairs.push(Pair { state, action, rho });
        q
    }

    /// Gradient of `sum_i upstream[i] * Q_i` over the recorded pairs,
    /// accumulated into `grads`.
    pub fn backward_into(
        &self,
        model: &QModel,
        params: &EncoderParams,
        upstream: &[f64],
        grads: &mut [f64],
    ) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::NoForward);
        }
        if upstream.len() != self.pairs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.pairs.len(),
                got: upstream.len(),
            });
        }
        if grads.len() != model.param_count() {
            return Err(Error::DimensionMismatch {
                expected: model.param_count(),
                got: grads.len(),
            });
        }
        let d = model.dim();
        let freqs = model.freqs();
        let mut g_states = vec![vec![0.0; d]; self.states.len()];
        let mut g_contents = vec![vec![0.0; d]; self.contents.len()];
        let stop_off = model.stop_offset();
        for (pair, &u) in self.pairs.iter().zip(upstream) {
            if u == 0.0 {
                continue;
            }
            let s = &self.states[pair.state.0].1.out;
            match pair.action {
                TapeAction::Content(id) => {
                    let c = &self.contents[id.0].1.out;
                    // dQ/ds = R c, dQ/dc = R^T s
                    let mut rc = c.clone();
                    rope::rotate_unchecked(&mut rc, pair.rho, freqs);
                    let mut rts = s.clone();
                    rope::rotate_unchecked(&mut rts, -pair.rho, freqs);
                    for (g, v) in g_states[pair.state.0].iter_mut().zip(&rc) {
                        *g += u * v;
                    }
                    for (g, v) in g_contents[id.0].iter_mut().zip(&rts) {
                        *g += u * v;
                    }
                }
                TapeAction::Stop => {
                    let stop = model.stop_vec(params);
                    for (g, v) in g_states[pair.state.0].iter_mut().zip(stop) {
                        *g += u * v;
                    }
                    for (g, v) in grads[stop_off..stop_off + d].iter_mut().zip(s) {
                        *g += u * v;
                    }
                }
            }
        }
        for ((fv, cache), g) in self.states.iter().zip(&g_states) {
            if g.iter().any(|&x| x != 0.0) {
                model.tower_backward(params, Tower::State, fv, cache, g, grads);
            }
        }
        for ((fv, cache), g) in self.contents.iter().zip(&g_contents) {
            if g.iter().any(|&x| x != 0.0) {
                model.tower_backward(params, Tower::Action, fv, cache, g, grads);
            }
        }
        Ok(())
    }

    pub fn backward(&self, model: &QModel, params: &EncoderParams, upstream: &[f64]) -> Result<Vec<f64>> {
        let mut grads = vec![0.0; model.param_count()];
        self.backward_into(model, params, upstream, &mut grads)?;
        Ok(grads)
    }
}

//! State and action encoders.
//!
//! Each tower maps a hashed feature vector to `R^dim`:
//! `x -> e = sum_b xhat_b E[b] -> a = tanh(W1 e + b1) -> W2 a + b2`,
//! where `xhat` is the L2-normalised count vector. All trainable weights of
//! both towers plus the learned Stop vector live in one flat `Vec<f64>` so
//! that the optimizer, EMA and checkpointing work on plain slices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureVector, Featurizer};
use crate::relpos::{DEFAULT_DELTA, DEFAULT_ELL};
use crate::rope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionMode {
    /// Rotate by the document index `i`.
    Absolute,
    /// Rotate by the relative index recomputed from the selected set each step.
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub dim: usize,
    pub hidden: usize,
    pub features: FeatureConfig,
    pub rope_base: f64,
    pub position: PositionMode,
    pub delta: f64,
    pub ell: f64,
    /// Std-dev multiplier of the output layer at init; controls initial |Q|.
    pub init_scale: f64,
    /// Start the action tower as a copy of the state tower, so the initial
    /// critic already favours chunks that share words with the query.
    pub tied_init: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            hidden: 64,
            features: FeatureConfig::default(),
            rope_base: 10000.0,
            position: PositionMode::Relative,
            delta: DEFAULT_DELTA,
            ell: DEFAULT_ELL,
            init_scale: 0.2,
            tied_init: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tower {
    State,
    Action,
}

/// Offsets of one tower inside the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct TowerLayout {
    emb: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    end: usize,
}

impl TowerLayout {
    fn new(base: usize, buckets: usize, hidden: usize, dim: usize) -> Self {
        let emb = base;
        let w1 = emb + buckets * hidden;
        let b1 = w1 + hidden * hidden;
        let w2 = b1 + hidden;
        let b2 = w2 + dim * hidden;
        let end = b2 + dim;
        Self {
            emb,
            w1,
            b1,
            w2,
            b2,
            end,
        }
    }
}

/// Activations saved by a tower forward pass.
#[derive(Debug, Clone)]
pub struct TowerCache {
    pub(crate) e: Vec<f64>,
    pub(crate) a: Vec<f64>,
    pub out: Vec<f64>,
}

/// The trainable weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub values: Vec<f64>,
}

impl EncoderParams {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Architecture: shapes, featurizer and rotation frequencies. Holds no weights.
#[derive(Debug, Clone)]
pub struct QModel {
    cfg: EncoderConfig,
    featurizer: Featurizer,
    freqs: Vec<f64>,
    state: TowerLayout,
    action: TowerLayout,
    stop: usize,
    len: usize,
}

impl QModel {
    pub fn new(cfg: EncoderConfig) -> Result<Self> {
        let freqs = rope::frequencies(cfg.dim, cfg.rope_base)?;
        if cfg.hidden == 0 || cfg.features.buckets == 0 {
            return Err(Error::Config("hidden size and bucket count must be positive".into()));
        }
        if !(cfg.ell > 0.0 && cfg.ell < cfg.delta) {
            return Err(Error::Config("need 0 < ell < delta".into()));
        }
        let b = cfg.features.buckets as usize;
        let state = TowerLayout::new(0, b, cfg.hidden, cfg.dim);
        let action = TowerLayout::new(state.end, b, cfg.hidden, cfg.dim);
        let stop = action.end;
        Ok(Self {
            featurizer: Featurizer::new(cfg.features),
            cfg,
            freqs,
            state,
            action,
            stop,
            len: stop + cfg.dim,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.cfg
    }

    pub fn featurizer(&self) -> &Featurizer {
        &self.featurizer
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn dim(&self) -> usize {
        self.cfg.dim
    }

    pub fn param_count(&self) -> usize {
        self.len
    }

    fn layout(&self, tower: Tower) -> &TowerLayout {
        match tower {
            Tower::State => &self.state,
            Tower::Action => &self.action,
        }
    }

    pub fn init_params(&self, seed: u64) -> EncoderParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = self.cfg.hidden;
        let std_normal = Normal::new(0.0, 1.0).unwrap();
        let mut values = vec![0.0; self.len];
        for lay in [self.state, self.action] {
            for v in &mut values[lay.emb..lay.w1] {
                *v = std_normal.sample(&mut rng);
            }
            let s1 = 1.0 / (h as f64).sqrt();
            for v in &mut values[lay.w1..lay.b1] {
                *v = s1 * std_normal.sample(&mut rng);
            }
            let s2 = self.cfg.init_scale / (h as f64).sqrt();
            for v in &mut values[lay.w2..lay.b2] {
                *v = s2 * std_normal.sample(&mut rng);
            }
        }
        if self.cfg.tied_init {
            let (s, a) = (self.state, self.action);
            values.copy_within(s.emb..s.end, a.emb);
        }
        for v in &mut values[self.stop..] {
            *v = 0.1 * self.cfg.init_scale * std_normal.sample(&mut rng);
        }
        EncoderParams { values }
    }

    fn check_params(&self, params: &EncoderParams) {
        assert_eq!(
            params.values.len(),
            self.len,
            "parameter vector does not match the model layout"
        );
    }

    pub fn tower_forward(&self, params: &EncoderParams, tower: Tower, x: &FeatureVector) -> TowerCache {
        self.check_params(params);
        let p = &params.values;
        let lay = self.layout(tower);
        let (h, d) = (self.cfg.hidden, self.cfg.dim);

        let mut e = vec![0.0; h];
        let norm = x.norm();
        if norm > 0.0 {
            for &(b, c) in x.entries() {
                let w = c / norm;
                let row = &p[lay.emb + b as usize * h..lay.emb + (b as usize + 1) * h];
                for (ei, ri) in e.iter_mut().zip(row) {
                    *ei += w * ri;
                }
            }
        }
        let w1 = &p[lay.w1..lay.b1];
        let b1 = &p[lay.b1..lay.w2];
        let a: Vec<f64> = (0..h)
            .map(|r| {
                let row = &w1[r * h..(r + 1) * h];
                let u: f64 = b1[r] + row.iter().zip(&e).map(|(w, x)| w * x).sum::<f64>();
                u.tanh()
            })
            .collect();
        let w2 = &p[lay.w2..lay.b2];
        let b2 = &p[lay.b2..lay.end];
        let out: Vec<f64> = (0..d)
            .map(|r| {
                let row = &w2[r * h..(r + 1) * h];
                b2[r] + row.iter().zip(&a).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect();
        TowerCache { e, a, out }
    }

    /// Accumulates `d <g_out, tower(x)> / d params` into `grads`.
    pub fn tower_backward(
        &self,
        params: &EncoderParams,
        tower: Tower,
        x: &FeatureVector,
        cache: &TowerCache,
        g_out: &[f64],
        grads: &mut [f64],
    ) {
        let p = &params.values;
        let lay = self.layout(tower);
        let (h, d) = (self.cfg.hidden, self.cfg.dim);
        debug_assert_eq!(g_out.len(), d);

        for (r, &g) in g_out.iter().enumerate() {
            grads[lay.b2 + r] += g;
            if g != 0.0 {
                let row = &mut grads[lay.w2 + r * h..lay.w2 + (r + 1) * h];
                for (gw, &ai) in row.iter_mut().zip(&cache.a) {
                    *gw += g * ai;
                }
            }
        }
        let w2 = &p[lay.w2..lay.b2];
        let mut g_u = vec![0.0; h];
        for (r, &g) in g_out.iter().enumerate() {
            if g != 0.0 {
                for (gu, w) in g_u.iter_mut().zip(&w2[r * h..(r + 1) * h]) {
                    *gu += g * w;
                }
            }
        }
        for (gu, &ai) in g_u.iter_mut().zip(&cache.a) {
            *gu *= 1.0 - ai * ai;
        }
        let w1 = &p[lay.w1..lay.b1];
        let mut g_e = vec![0.0; h];
        for (r, &g) in g_u.iter().enumerate() {
            grads[lay.b1 + r] += g;
            if g != 0.0 {
                let grow = &mut grads[lay.w1 + r * h..lay.w1 + (r + 1) * h];
                for (gw, &ei) in grow.iter_mut().zip(&cache.e) {
                    *gw += g * ei;
                }
                for (ge, w) in g_e.iter_mut().zip(&w1[r * h..(r + 1) * h]) {
                    *ge += g * w;
                }
            }
        }
        let norm = x.norm();
        if norm > 0.0 {
            for &(b, c) in x.entries() {
                let w = c / norm;
                let row = &mut grads[lay.emb + b as usize * h..lay.emb + (b as usize + 1) * h];
                for (gr, ge) in row.iter_mut().zip(&g_e) {
                    *gr += w * ge;
                }
            }
        }
    }

    pub fn encode_state(&self, params: &EncoderParams, state_feats: &FeatureVector) -> Vec<f64> {
        self.tower_forward(params, Tower::State, state_feats).out
    }

    /// Position-free content embedding of a chunk.
    pub fn encode_content(&self, params: &EncoderParams, chunk_feats: &FeatureVector) -> Vec<f64> {
        self.tower_forward(params, Tower::Action, chunk_feats).out
    }

    pub fn stop_vec<'a>(&self, params: &'a EncoderParams) -> &'a [f64] {
        &params.values[self.stop..]
    }

    /// Parameter indices of a tower's output layer (`W2` then `b2`).
    pub fn output_range(&self, tower: Tower) -> std::ops::Range<usize> {
        let lay = self.layout(tower);
        lay.w2..lay.end
    }

    pub(crate) fn stop_offset(&self) -> usize {
        self.stop
    }
}

//! Hashed n-gram features: the vocabulary-free input layer of both encoders.

use serde::{Deserialize, Serialize};

/// Selected chunks beyond this document-order slot share the last slot tag.
pub const MAX_STATE_SLOTS: usize = 8;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h = FNV_OFFSET;
    for part in parts {
        for &b in *part {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
        // separator so ("ab","c") and ("a","bc") differ
        h ^= 0xff;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Sparse bucket -> count map, sorted by bucket.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    bucket_count: u32,
    entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn zeros(bucket_count: u32) -> Self {
        Self {
            bucket_count,
            entries: Vec::new(),
        }
    }

    /// Builds from unsorted (bucket, count) pairs, summing duplicates.
    pub fn from_pairs(bucket_count: u32, mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_unstable_by_key(|p| p.0);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for (b, c) in pairs {
            debug_assert!(b < bucket_count);
            match entries.last_mut() {
                Some(last) if last.0 == b => last.1 += c,
                _ => entries.push((b, c)),
            }
        }
        entries.retain(|e| e.1 != 0.0);
        Self {
            bucket_count,
            entries,
        }
    }

    pub fn bucket_count(&self) -> u32 {
        self.bucket_count
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }

    pub fn get(&self, bucket: u32) -> f64 {
        self.entries
            .binary_search_by_key(&bucket, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }
}

/// Lowercased alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub buckets: u32,
    /// Word n-grams of order 1..=word_ngrams.
    pub word_ngrams: usize,
    /// Character n-grams of exactly this order inside each token; 0 disables.
    pub char_ngrams: usize,
    /// Chunk texts are truncated to this many tokens (tail dropped).
    pub max_action_tokens: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            buckets: 4096,
            word_ngrams: 2,
            char_ngrams: 0,
            max_action_tokens: 220,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Featurizer {
    cfg: FeatureConfig,
}

impl Featurizer {
    pub fn new(cfg: FeatureConfig) -> Self {
        assert!(cfg.buckets > 0, "bucket count must be positive");
        Self { cfg }
    }

    pub fn config(&self) -> FeatureConfig {
        self.cfg
    }

    fn bucket(&self, h: u64) -> u32 {
        (h % self.cfg.buckets as u64) as u32
    }

    fn featurize_tokens(&self, tokens: &[String]) -> FeatureVector {
        let mut pairs = Vec::new();
        for n in 1..=self.cfg.word_ngrams {
            for w in tokens.windows(n) {
                let mut parts: Vec<&[u8]> = vec![b"w"];
                parts.extend(w.iter().map(|t| t.as_bytes()));
                pairs.push((self.bucket(fnv1a(&parts)), 1.0));
            }
        }
        if self.cfg.char_ngrams > 0 {
            let n = self.cfg.char_ngrams;
            for tok in tokens {
                let padded: Vec<char> = format!("<{tok}>").chars().collect();
                for w in padded.windows(n) {
                    let s: String = w.iter().collect();
                    pairs.push((self.bucket(fnv1a(&[b"c", s.as_bytes()])), 1.0));
                }
            }
        }
        FeatureVector::from_pairs(self.cfg.buckets, pairs)
    }

    /// Features of a query (no truncation).
    pub fn featurize(&self, text: &str) -> FeatureVector {
        self.featurize_tokens(&tokenize(text))
    }

    /// Features of a chunk, truncated to `max_action_tokens`.
    pub fn featurize_chunk(&self, text: &str) -> FeatureVector {
        let mut tokens = tokenize(text);
        tokens.truncate(self.cfg.max_action_tokens);
        self.featurize_tokens(&tokens)
    }

    /// State features: the query plus each selected chunk's features re-hashed
    /// with its document-order slot, so the state is order aware.
    pub fn state_features<'a>(
        &self,
        query: &FeatureVector,
        selected_in_doc_order: impl IntoIterator<Item = &'a FeatureVector>,
    ) -> FeatureVector {
        let mut pairs: Vec<(u32, f64)> = query.entries().to_vec();
        for (slot, fv) in selected_in_doc_order.into_iter().enumerate() {
            let tag = (slot.min(MAX_STATE_SLOTS - 1) + 1) as u8;
            for &(b, c) in fv.entries() {
                let h = fnv1a(&[b"s", &[tag], &b.to_le_bytes()]);
                pairs.push((self.bucket(h), c));
            }
        }
        FeatureVector::from_pairs(self.cfg.buckets, pairs)
    }
}

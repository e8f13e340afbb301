//! Key/value needles hidden among filler sentences.

use rand::seq::{index, IndexedRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::TaskInstance;
use crate::error::{Error, Result};
use crate::seeding::rng_for;

use super::text::{filler, KEYS};
use super::FillerStyle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NiahKind {
    /// One needle, one key.
    Single,
    /// Several needles with distinct keys; the query asks about one.
    MultiKey,
    /// Several needles sharing one key; the query asks for all values.
    MultiValue,
    /// Several needles with distinct keys; the query asks about all of them.
    MultiQuery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NiahSpec {
    pub kind: NiahKind,
    pub num_chunks: usize,
    pub needle_count: usize,
    /// Number of key words to draw from (at most 24).
    pub key_alphabet: usize,
    /// Values are decimal numbers with this many digits.
    pub value_digits: usize,
    pub filler: FillerStyle,
    pub seed: u64,
}

impl Default for NiahSpec {
    fn default() -> Self {
        Self {
            kind: NiahKind::Single,
            num_chunks: 64,
            needle_count: 1,
            key_alphabet: KEYS.len(),
            value_digits: 6,
            filler: FillerStyle::Plain,
            seed: 0,
        }
    }
}

impl NiahSpec {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.needle_count == 0 {
            return cfg("needle_count must be at least 1".into());
        }
        if self.num_chunks < self.needle_count {
            return cfg(format!(
                "{} needles do not fit in {} chunks",
                self.needle_count, self.num_chunks
            ));
        }
        if self.kind == NiahKind::Single && self.needle_count != 1 {
            return cfg("single-needle tasks take needle_count = 1".into());
        }
        if self.key_alphabet == 0 || self.key_alphabet > KEYS.len() {
            return cfg(format!("key_alphabet must be in 1..={}", KEYS.len()));
        }
        let distinct_keys = matches!(self.kind, NiahKind::MultiKey | NiahKind::MultiQuery);
        if distinct_keys && self.needle_count > self.key_alphabet {
            return cfg("not enough keys for distinct needles".into());
        }
        if !(1..=18).contains(&self.value_digits) {
            return cfg("value_digits must be in 1..=18".into());
        }
        let values = 9 * 10u64.pow(self.value_digits as u32 - 1);
        if self.kind == NiahKind::MultiValue && self.needle_count as u64 > values {
            return cfg("not enough values for distinct needles".into());
        }
        Ok(())
    }
}

fn needle(key: &str, value: &str) -> String {
    format!("One of the special magic numbers for {key} is: {value}.")
}

fn random_value<R: Rng + ?Sized>(rng: &mut R, digits: usize) -> String {
    let lo = 10u64.pow(digits as u32 - 1);
    rng.random_range(lo..lo * 10).to_string()
}

pub fn gen_niah(spec: &NiahSpec) -> Result<TaskInstance> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, &[0x6e69_6168]);
    let m = spec.num_chunks;
    let n = spec.needle_count;
    let key_pool = &KEYS[..spec.key_alphabet];

    let keys: Vec<&str> = match spec.kind {
        NiahKind::Single | NiahKind::MultiValue => vec![*key_pool.choose(&mut rng).unwrap(); n],
        NiahKind::MultiKey | NiahKind::MultiQuery => index::sample(&mut rng, key_pool.len(), n)
            .into_iter()
            .map(|i| key_pool[i])
            .collect(),
    };
    let mut values: Vec<String> = Vec::with_capacity(n);
    while values.len() < n {
        let v = random_value(&mut rng, spec.value_digits);
        if !values.contains(&v) {
            values.push(v);
        }
    }

    let mut positions: Vec<usize> = index::sample(&mut rng, m, n).into_iter().map(|i| i + 1).collect();
    positions.sort_unstable();

    let confusable = spec.filler == FillerStyle::Confusable;
    let mut chunks: Vec<String> = (0..m).map(|_| filler(&mut rng, confusable, key_pool)).collect();
    for (j, &p) in positions.iter().enumerate() {
        chunks[p - 1] = needle(keys[j], &values[j]);
    }

    let (query, support, answer) = match spec.kind {
        NiahKind::Single => (
            format!("What is the special magic number for {}?", keys[0]),
            positions.clone(),
            values[0].clone(),
        ),
        NiahKind::MultiKey => {
            let j = rng.random_range(0..n);
            (
                format!("What is the special magic number for {}?", keys[j]),
                vec![positions[j]],
                values[j].clone(),
            )
        }
        NiahKind::MultiValue => (
            format!("What are all the special magic numbers for {}?", keys[0]),
            positions.clone(),
            values.join(", "),
        ),
        NiahKind::MultiQuery => (
            format!("What are the special magic numbers for {}?", join_list(&keys)),
            positions.clone(),
            values.join(", "),
        ),
    };
    let id = format!("niah-{:?}-{m}-{:016x}", spec.kind, spec.seed).to_lowercase();
    TaskInstance::new(id, query, chunks, support, answer)
}

fn join_list(words: &[&str]) -> String {
    match words {
        [] => String::new(),
        [w] => w.to_string(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_needle_holds_the_pair() {
        let inst = gen_niah(&NiahSpec {
            num_chunks: 8,
            seed: 11,
            ..NiahSpec::default()
        })
        .unwrap();
        assert_eq!(inst.num_chunks(), 8);
        assert_eq!(inst.support_ids.len(), 1);
        let i = *inst.support_ids.iter().next().unwrap();
        let text = &inst.chunk(i).unwrap().text;
        assert!(text.contains(&inst.answer));
        let key = inst.query.trim_end_matches('?').rsplit(' ').next().unwrap();
        assert!(text.contains(key));
    }

    #[test]
    fn multivalue_shares_one_key() {
        let inst = gen_niah(&NiahSpec {
            kind: NiahKind::MultiValue,
            needle_count: 3,
            num_chunks: 20,
            seed: 5,
            ..NiahSpec::default()
        })
        .unwrap();
        assert_eq!(inst.support_ids.len(), 3);
        let keys: std::collections::BTreeSet<_> = inst
            .support_ids
            .iter()
            .map(|&i| inst.chunk(i).unwrap().text.split(" is:").next().unwrap().to_string())
            .collect();
        assert_eq!(keys.len(), 1);
    }

    #[test]
    fn deterministic_per_seed() {
        for kind in [NiahKind::Single, NiahKind::MultiKey, NiahKind::MultiValue, NiahKind::MultiQuery] {
            let spec = NiahSpec {
                kind,
                needle_count: if kind == NiahKind::Single { 1 } else { 4 },
                num_chunks: 32,
                filler: FillerStyle::Confusable,
                seed: 99,
                ..NiahSpec::default()
            };
            assert_eq!(gen_niah(&spec).unwrap(), gen_niah(&spec).unwrap());
            let other = gen_niah(&NiahSpec { seed: 100, ..spec.clone() }).unwrap();
            assert_ne!(gen_niah(&spec).unwrap(), other);
        }
    }

    #[test]
    fn too_many_needles_is_an_error() {
        let spec = NiahSpec {
            kind: NiahKind::MultiKey,
            needle_count: 5,
            num_chunks: 4,
            ..NiahSpec::default()
        };
        assert!(matches!(gen_niah(&spec), Err(Error::Config(_))));
    }
}

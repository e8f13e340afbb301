//! Entity-movement narratives: a protagonist visits `hops` locations, other
//! entities move around too, and the question asks where the protagonist is
//! now or where it was before a named location.

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::TaskInstance;
use crate::error::{Error, Result};
use crate::seeding::rng_for;

use super::text::{capitalize, filler, ENTITIES, LOCATIONS, MOVE_VERBS};
use super::FillerStyle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactChainSpec {
    pub num_chunks: usize,
    /// Number of protagonist moves.
    pub hops: usize,
    /// Entity and location alphabet sizes.
    pub entities: usize,
    pub locations: usize,
    /// Ask "where was X before L?" instead of "where is X?".
    pub temporal_question: bool,
    /// Moves by other entities placed among the protagonist's facts.
    pub distractor_moves: usize,
    pub filler: FillerStyle,
    pub seed: u64,
}

impl Default for FactChainSpec {
    fn default() -> Self {
        Self {
            num_chunks: 64,
            hops: 2,
            entities: 6,
            locations: 8,
            temporal_question: true,
            distractor_moves: 6,
            filler: FillerStyle::Plain,
            seed: 0,
        }
    }
}

impl FactChainSpec {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.hops == 0 {
            return cfg("hops must be at least 1".into());
        }
        if self.temporal_question && self.hops < 2 {
            return cfg("a temporal question needs at least 2 hops".into());
        }
        let facts = self.hops + self.distractor_moves;
        if self.num_chunks < facts {
            return cfg(format!(
                "{facts} facts do not fit in {} chunks",
                self.num_chunks
            ));
        }
        if self.entities == 0 || self.entities > ENTITIES.len() {
            return cfg(format!("entities must be in 1..={}", ENTITIES.len()));
        }
        if self.distractor_moves > 0 && self.entities < 2 {
            return cfg("distractor moves need a second entity".into());
        }
        if self.locations > LOCATIONS.len() || self.locations < self.hops {
            return cfg(format!(
                "locations must be in {}..={}",
                self.hops,
                LOCATIONS.len()
            ));
        }
        Ok(())
    }
}

fn move_fact<R: Rng + ?Sized>(rng: &mut R, who: &str, place: &str) -> String {
    let verb = MOVE_VERBS.choose(rng).unwrap();
    format!("{} {verb} the {place}.", capitalize(who))
}

pub fn gen_fact_chain(spec: &FactChainSpec) -> Result<TaskInstance> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, &[0x6661_6374]);
    let m = spec.num_chunks;
    let h = spec.hops;
    let facts = h + spec.distractor_moves;

    let cast: Vec<&str> = index::sample(&mut rng, spec.entities, spec.entities)
        .into_iter()
        .map(|i| ENTITIES[i])
        .collect();
    let hero = cast[0];
    let places = &LOCATIONS[..spec.locations];
    let route: Vec<&str> = index::sample(&mut rng, places.len(), h)
        .into_iter()
        .map(|i| places[i])
        .collect();

    let mut positions: Vec<usize> = index::sample(&mut rng, m, facts).into_iter().map(|i| i + 1).collect();
    positions.sort_unstable();
    let mut is_hero = vec![false; facts];
    is_hero[..h].iter_mut().for_each(|b| *b = true);
    is_hero.shuffle(&mut rng);

    let confusable = spec.filler == FillerStyle::Confusable;
    let mut chunks: Vec<String> = (0..m).map(|_| filler(&mut rng, confusable, places)).collect();
    let mut hero_positions = Vec::with_capacity(h);
    for (slot, &p) in positions.iter().enumerate() {
        chunks[p - 1] = if is_hero[slot] {
            let place = route[hero_positions.len()];
            hero_positions.push(p);
            move_fact(&mut rng, hero, place)
        } else {
            let who = cast[1..].choose(&mut rng).unwrap();
            let place = places.choose(&mut rng).unwrap();
            move_fact(&mut rng, who, place)
        };
    }

    let (query, support, answer) = if spec.temporal_question {
        let j = rng.random_range(1..h);
        (
            format!("Where was {} before the {}?", capitalize(hero), route[j]),
            vec![hero_positions[j - 1], hero_positions[j]],
            route[j - 1].to_string(),
        )
    } else {
        (
            format!("Where is {}?", capitalize(hero)),
            vec![hero_positions[h - 1]],
            route[h - 1].to_string(),
        )
    };
    let id = format!("fact-{m}-{h}-{:016x}", spec.seed);
    TaskInstance::new(id, query, chunks, support, answer)
}

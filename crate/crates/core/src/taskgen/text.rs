//! Word pools for the generators.

use rand::seq::IndexedRandom;
use rand::Rng;

pub(crate) const ENTITIES: &[&str] = &[
    "mary", "john", "sandra", "daniel", "emma", "lucas", "olivia", "noah", "fred", "julie",
    "bill", "jeff",
];

pub(crate) const LOCATIONS: &[&str] = &[
    "kitchen", "garden", "office", "hallway", "bedroom", "bathroom", "cellar", "attic", "garage",
    "library", "park", "school",
];

pub(crate) const MOVE_VERBS: &[&str] = &["went to", "moved to", "travelled to", "journeyed to"];

pub(crate) const KEYS: &[&str] = &[
    "amber", "basalt", "cobalt", "dune", "ember", "fjord", "glacier", "harbor", "iris", "juniper",
    "kestrel", "lagoon", "meadow", "nebula", "onyx", "prairie", "quartz", "raven", "sierra",
    "tundra", "umber", "violet", "willow", "zephyr",
];

const SUBJECTS: &[&str] = &[
    "the weather", "an old clock", "a small bird", "the radio", "the neighbour's dog",
    "a gentle breeze", "the morning train", "a red kite", "the village bell", "a paper boat",
    "the evening news", "a tall candle",
];

const PREDICATES: &[&str] = &[
    "seemed calm that day", "made a quiet sound", "was hard to ignore", "changed without warning",
    "caught everyone by surprise", "was mentioned twice", "stayed the same for hours",
    "looked brighter than usual", "drifted slowly past", "was forgotten by noon",
];

const PLACE_PREDICATES: &[&str] = &[
    "was freshly painted", "felt colder than usual", "smelled of rain", "had a broken lamp",
    "was very quiet",
];

/// A filler sentence; `confusable` lets it mention one of `mentions`.
pub(crate) fn filler<R: Rng + ?Sized>(rng: &mut R, confusable: bool, mentions: &[&str]) -> String {
    if confusable && !mentions.is_empty() && rng.random_bool(0.5) {
        let w = mentions.choose(rng).unwrap();
        let p = PLACE_PREDICATES.choose(rng).unwrap();
        format!("The {w} {p}.")
    } else {
        let s = SUBJECTS.choose(rng).unwrap();
        let p = PREDICATES.choose(rng).unwrap();
        let mut text = format!("{s} {p}.");
        text[..1].make_ascii_uppercase();
        text
    }
}

pub(crate) fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

//! Seed derivation. Every random stream in a run is a pure function of the
//! master seed and a path of integers, so parallel and serial execution (and
//! resumed runs) draw identical numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Training instances.
pub const NS_TRAIN: u64 = 0x7472_6169_6e00_0001;
/// Held-out evaluation instances; disjoint from [`NS_TRAIN`].
pub const NS_EVAL: u64 = 0x6576_616c_0000_0002;
/// Policy sampling during rollouts.
pub const NS_ROLLOUT: u64 = 0x726f_6c6c_0000_0003;
/// Parameter initialisation.
pub const NS_INIT: u64 = 0x696e_6974_0000_0004;
/// Instances written out as datasets.
pub const NS_GEN: u64 = 0x6765_6e00_0000_0005;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_for(base: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, path))
}

//! Reproducible random streams.
//!
//! A [`RngSeed`] is a 64-bit key. Child keys are derived by hashing the parent
//! key with a child index, so replication `r` of an experiment always sees the
//! stream `seed.child(r)` no matter which thread runs it or in what order.
//! Each key drives a ChaCha8 generator, which is itself counter based.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed(seed)
    }

    /// Key of the `index`-th child stream. Depends only on `(self, index)`.
    pub fn child(self, index: u64) -> RngSeed {
        let k = mix64(self.0.wrapping_add(GOLDEN_GAMMA));
        RngSeed(mix64(k ^ mix64(index.wrapping_mul(GOLDEN_GAMMA).wrapping_add(1))))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

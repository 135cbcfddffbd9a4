//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] addressed by a
//! `(master seed, domain, index)` triple. The domain separates unrelated uses
//! of the same master seed (different system sizes, disorder draws, ...);
//! the index selects one of the 2^64 ChaCha streams, so replica `r` always
//! sees the same numbers no matter which worker runs it.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Fixed domain tags used inside the crate.
pub mod domain {
    pub const DISORDER: u64 = 0x6469_736f_7264_6572;
    pub const ENSEMBLE: u64 = 0x656e_7365_6d62_6c65;
    pub const EXCURSION_MC: u64 = 0x6578_6375_7273_696f;
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Master seed from which per-replica streams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSeed(pub u64);

impl StreamSeed {
    /// Stream `index` within `domain`.
    pub fn rng(self, domain: u64, index: u64) -> ChaCha8Rng {
        let key = splitmix64(self.0 ^ splitmix64(domain));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(index);
        rng
    }

    /// Derives a sub-seed, e.g. one per system size in a sweep.
    pub fn child(self, tag: u64) -> StreamSeed {
        StreamSeed(splitmix64(self.0.wrapping_add(splitmix64(tag))))
    }
}

//! Seed hierarchy.
//!
//! Every random stream in the crate is derived from a 64-bit master seed by
//! a counter-based split: `derive_seed(master, stream, index)` mixes the three
//! words with the SplitMix64 finalizer. Replicate `i` of stream `s` therefore
//! gets the same generator regardless of which thread runs it or in which
//! order replicates are scheduled.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator used for all simulations.
pub type SimRng = Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for replicate `index` of the named `stream`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let s = splitmix64(master ^ splitmix64(stream.wrapping_mul(GOLDEN)));
    splitmix64(s ^ splitmix64(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn stream_rng(master: u64, stream: u64, index: u64) -> SimRng {
    rng_from_seed(derive_seed(master, stream, index))
}

/// Stream labels so that unrelated uses of one master seed never collide.
pub mod streams {
    pub const FRONT: u64 = 1;
    pub const FITNESS: u64 = 2;
    pub const PARENTS: u64 = 3;
    pub const REPLICATE: u64 = 4;
    pub const COALESCENT: u64 = 5;
    pub const MOMENTS: u64 = 6;
    pub const SAMPLE: u64 = 7;
    pub const GENERATION: u64 = 8;
}

//! Deterministic random streams.
//!
//! Every random draw in a sweep comes from a stream keyed by
//! `(root seed, sweep, block)`, so a chain's trajectory does not depend on
//! whether blocks are processed serially or on a thread pool.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every stream.
pub type StreamRng = ChaCha8Rng;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes a root seed with two indices into a child seed.
pub fn child_seed(root: u64, a: u64, b: u64) -> u64 {
    splitmix(splitmix(splitmix(root) ^ a.wrapping_mul(0xD6E8_FEB8_6659_FD93)) ^ b)
}

/// Stream for block `block` of sweep `sweep` of the chain rooted at `root`.
pub fn stream(root: u64, sweep: u64, block: u64) -> StreamRng {
    StreamRng::seed_from_u64(child_seed(root, sweep, block))
}

/// Plain generator seeded from a single integer.
pub fn seeded(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(splitmix(seed))
}

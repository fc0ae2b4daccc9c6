//! Seed derivation so every run is reproducible from one manifest seed.
//!
//! Child streams are derived by mixing the root seed with a stream id through
//! SplitMix64. Streams are independent of execution order, so replications
//! may run in parallel without changing results.

use rand_pcg::Pcg64Mcg;
use rand::SeedableRng;

/// SplitMix64 finalizer; good avalanche, cheap, stable across platforms.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed for the given stream id.
pub fn child_seed(root: u64, stream: u64) -> u64 {
    splitmix64(root ^ splitmix64(stream.wrapping_add(0x51ed_270b)))
}

/// RNG for a named stream of a root seed.
pub fn stream_rng(root: u64, stream: u64) -> Pcg64Mcg {
    Pcg64Mcg::seed_from_u64(child_seed(root, stream))
}

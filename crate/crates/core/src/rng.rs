//! Seed handling for reproducible Monte Carlo.
//!
//! Each path draws its Gaussian increments from a ChaCha8 stream keyed by a
//! 64-bit seed. Replicate seeds are a pure function of `(master_seed, index)`,
//! so replicates can be generated in any order, or in parallel, and still
//! produce the same ensemble.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `index` under `master_seed`.
///
/// This is the `index`-th output of a SplitMix64 generator started at
/// `mix64(master_seed)`: a counter-based split, no sequential state involved.
pub fn replicate_seed(master_seed: u64, index: u64) -> u64 {
    let base = mix64(master_seed ^ 0x6A09_E667_F3BC_C909);
    mix64(base.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1))))
}

/// Generator used for a single path.
pub fn path_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

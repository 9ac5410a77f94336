//! Deterministic seed derivation.
//!
//! Every randomized routine in the crate takes an explicit `u64` seed and
//! owns a private ChaCha stream, so results are reproducible bit-for-bit
//! across runs and platforms.  Trials of an experiment get independent
//! substreams derived here; the derivation is pure arithmetic, so a recorded
//! per-trial seed is enough to replay that trial in isolation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 output function.  Used as a cheap mixer when deriving
/// substream seeds; the constants are the standard ones.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `t` of an experiment with the given master seed.
pub fn trial_seed(master_seed: u64, t: u64) -> u64 {
    master_seed ^ splitmix64(t)
}

/// Seed for labelled draw `label` inside a single trial (matrix, signal,
/// noise, ... each get their own stream so edits to one draw never shift
/// another).
pub fn sub_seed(seed: u64, label: u64) -> u64 {
    splitmix64(seed ^ splitmix64(label))
}

/// The RNG used everywhere randomness is needed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator keyed by a root
//! seed and a path of stream labels, so independent workers can draw from
//! non-overlapping streams without sharing a generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a root seed with a path of labels into a child seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &label| splitmix64(acc ^ splitmix64(label)))
}

pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}

// Stream labels. Keep them stable: changing one changes every seeded result.
pub(crate) const SAMPLER: u64 = 1;
pub(crate) const RESPONSE_NOISE: u64 = 2;
pub(crate) const MODEL_NOISE: u64 = 3;
pub(crate) const NN_INIT: u64 = 4;
pub(crate) const TRUTH: u64 = 5;
pub(crate) const REPETITION: u64 = 6;
pub(crate) const BIN_POINTS: u64 = 7;

//! Seed derivation.
//!
//! Every stochastic draw in the crate comes from a ChaCha8 generator keyed by
//! a 64-bit seed and a stream id. Seeds for sub-experiments are derived by
//! mixing a parent seed with a list of integer labels, so results never depend
//! on evaluation order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids reserved for the generators in [`crate::streams`] and
/// [`crate::reduction`].
pub mod stream {
    pub const JUMP: u64 = 1;
    pub const PHASE: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const AMPLITUDE: u64 = 4;
    pub const SUBSAMPLE: u64 = 5;
    pub const PERMUTATION: u64 = 6;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` and an ordered list of labels.
pub fn derive(base: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix64(base), |acc, &l| splitmix64(acc ^ splitmix64(l)))
}

/// Generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stable 64-bit label for a string, used to fold names into seeds.
pub fn label(name: &str) -> u64 {
    // FNV-1a
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

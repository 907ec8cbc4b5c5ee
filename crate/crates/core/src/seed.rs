//! Hierarchical seed derivation.
//!
//! Every random draw in a study is addressed by a path such as
//! `(study seed, method, level, replication, stream, sample index)`. The path is
//! folded through SplitMix64 so that each sample owns an independent ChaCha
//! stream and results do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tags mixed into seed paths to keep method streams disjoint.
pub mod tag {
    pub const MC: u64 = 0x4d43;
    pub const QMC: u64 = 0x514d43;
    pub const MLMC: u64 = 0x4d4c4d43;
    pub const SCREEN: u64 = 0x5343524e;
    pub const REFERENCE: u64 = 0x524546;
    pub const TRUTH: u64 = 0x5452555448;
    pub const NOISE: u64 = 0x4e4f495345;
    /// Stream shared by numerator and denominator (dependent estimators).
    pub const SHARED: u64 = 0;
    /// Numerator-only stream (independent estimators).
    pub const NUMERATOR: u64 = 1;
    /// Denominator-only stream (independent estimators).
    pub const DENOMINATOR: u64 = 2;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a seed path into a single 64-bit seed.
pub fn derive(path: &[u64]) -> u64 {
    path.iter()
        .fold(0x6a09_e667_f3bc_c908, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Deterministic RNG for a seed path.
pub fn rng(path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(path))
}

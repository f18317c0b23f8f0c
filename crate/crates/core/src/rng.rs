//! Seed derivation utilities.
//!
//! All randomness in the workspace flows from one root seed through named
//! sub-streams so that components (graph generation, parameter init, neighbor
//! sampling, data splits) can be varied independently without disturbing each
//! other. Hashing is hand-rolled (splitmix64 / FNV-1a) so seeds are stable
//! across platforms and toolchain versions.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// splitmix64 finalizer; decorrelates nearby integer seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives a sub-seed for a named stream from the root seed.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    splitmix64(root ^ fnv1a(label))
}

/// Seeded RNG for a named sub-stream.
pub fn stream_rng(root: u64, label: &str) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(root, label))
}

/// Maps (seed, id) to a uniform value in [0, 1); used for hash-based splits
/// and partitions that must depend only on the id, never on iteration order.
pub fn hash_unit(seed: u64, id: u64) -> f64 {
    let h = splitmix64(splitmix64(seed).wrapping_add(splitmix64(id ^ 0x5bd1_e995)));
    // Top 53 bits give a uniform double in [0, 1).
    (h >> 11) as f64 / (1u64 << 53) as f64
}

//! Seed derivation and stable hashing helpers.
//!
//! Every random draw in the crate flows from a single `u64` seed through
//! [`child_seed`], so independent stages (dataset generation, parameter
//! init, batch shuffling) never share or race a generator.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a parent seed with a stream label into an independent child seed.
///
/// This is the splitmix64 finalizer applied to `parent ^ golden * label`;
/// distinct labels give decorrelated streams even for adjacent seeds.
pub fn child_seed(parent: u64, label: u64) -> u64 {
    let mut z = parent ^ label.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The crate-wide generator: small, fast, and identical on every platform.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// FNV-1a over raw bytes. Used to fingerprint config files and artifacts;
/// stable across platforms and releases because it is pinned here.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Hex fingerprint of raw bytes, as embedded in reports and checkpoints.
pub fn content_hash(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a64(bytes))
}

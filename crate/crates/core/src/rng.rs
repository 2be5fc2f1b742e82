//! Deterministic random substreams.
//!
//! Every random decision in the crate draws from a stream identified by
//! `(master_seed, purpose_tag, indices...)`. Streams are independent of the
//! order in which they are requested, so a batch of walks produces the same
//! output whether it is run serially or on a thread pool.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn tag_hash(tag: &str) -> u64 {
    // FNV-1a, stable across platforms and releases.
    tag.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01B3)
    })
}

/// Derives a 64-bit child seed from a parent seed and an index.
pub fn child_seed(parent: u64, index: u64) -> u64 {
    splitmix(splitmix(parent ^ GOLDEN.rotate_left(17)).wrapping_add(index))
}

/// Derives the seed of the stream `(master_seed, tag, indices...)`.
pub fn derive_seed(master_seed: u64, tag: &str, indices: &[u64]) -> u64 {
    let base = splitmix(master_seed ^ splitmix(tag_hash(tag)));
    indices.iter().fold(base, |acc, &i| child_seed(acc, i))
}

/// Opens the stream `(master_seed, tag, indices...)`.
pub fn stream(master_seed: u64, tag: &str, indices: &[u64]) -> StreamRng {
    seeded(derive_seed(master_seed, tag, indices))
}

/// Opens a stream directly from an already-derived seed.
pub fn seeded(seed: u64) -> StreamRng {
    let mut bytes = [0u8; 32];
    let mut s = seed;
    for chunk in bytes.chunks_exact_mut(8) {
        s = splitmix(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

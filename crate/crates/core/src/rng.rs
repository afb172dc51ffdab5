//! Seeded, counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha20 stream keyed by a
//! master seed and a domain label, with an explicit stream index. Two calls
//! with the same `(master, domain, index)` triple produce identical streams
//! regardless of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

// FNV-1a, fixed so that derived keys are stable across toolchains.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a 64-bit key from a master seed and a domain label.
pub fn derive_key(master: u64, domain: &str) -> u64 {
    splitmix64(master ^ splitmix64(fnv1a(domain.as_bytes())))
}

/// Independent stream number `index` within `domain` for `master`.
pub fn substream(master: u64, domain: &str, index: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(derive_key(master, domain));
    rng.set_stream(index);
    rng
}

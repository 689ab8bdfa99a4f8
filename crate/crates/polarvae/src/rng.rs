//! Deterministic named random-number streams.
//!
//! All randomness in the crate flows from a single master seed. Independent
//! components derive their own generators through [`stream`], which expands
//! `(seed, label)` into a ChaCha12 key via an FNV-1a hash followed by a
//! SplitMix64 finalizer. Streams are therefore stable across runs and
//! independent of the order in which components request them, which is what
//! makes commands re-runnable in isolation yet bitwise reproducible.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over the little-endian seed bytes followed by the label bytes.
pub fn fnv1a(seed: u64, label: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in seed.to_le_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// FNV-1a over raw bytes, for hashing canonicalized configuration text.
pub fn fnv1a_bytes(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the deterministic RNG stream identified by `label` from `seed`.
pub fn stream(seed: u64, label: &str) -> ChaCha12Rng {
    let mut state = fnv1a(seed, label);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Uniform draw from the open interval (0, 1).
///
/// `Rng::gen::<f64>()` samples [0, 1); the zero (probability 2⁻⁵³) is
/// rejected so that logarithms and reciprocals of the draw stay finite.
pub fn uniform_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return u;
        }
    }
}

//! Seed derivation. Every stochastic step keys its PRNG on `(seed, id)` so
//! results do not depend on iteration order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

fn digest(seed: u64, domain: &str, id: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((domain.len() as u64).to_le_bytes());
    hasher.update(domain.as_bytes());
    hasher.update(id.as_bytes());
    let out = hasher.finalize();
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&out);
    bytes
}

/// Stable 64-bit key for `(seed, domain, id)`.
pub fn stable_key(seed: u64, domain: &str, id: &str) -> u64 {
    let d = digest(seed, domain, id);
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Independent PRNG stream for one record.
pub fn record_rng(seed: u64, domain: &str, id: &str) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(digest(seed, domain, id))
}

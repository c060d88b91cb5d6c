//! Seed derivation for reproducible sub-experiments.
//!
//! Every random stream in a run is keyed by `master ⊕ H(purpose, parts)`,
//! where `H` is the first eight bytes (big-endian) of SHA-256 over the
//! purpose tag, a zero separator and the big-endian parts. A layout or a
//! single round can therefore be replayed without running anything before it.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a child seed from `master` for the given purpose and indices.
pub fn derive_seed(master: u64, purpose: &str, parts: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(purpose.as_bytes());
    hasher.update([0u8]);
    for part in parts {
        hasher.update(part.to_be_bytes());
    }
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    master ^ u64::from_be_bytes(head)
}

/// The generator used for all simulation randomness.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

//! Seed derivation.
//!
//! Every random draw in the crate comes from a [`SeedContext`]. The per-sample
//! stream seed is the first 8 bytes (little endian) of
//! `SHA-256(global_seed as u64 LE bytes || sample_id as UTF-8)`, and the stream
//! itself is a `ChaCha8Rng` seeded through `SeedableRng::seed_from_u64`. Both
//! are portable, so a given `(global_seed, sample_id)` yields the same draws on
//! every platform and independent of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedContext {
    pub global_seed: u64,
    pub sample_id: String,
}

impl SeedContext {
    pub fn new(global_seed: u64, sample_id: impl Into<String>) -> Self {
        Self {
            global_seed,
            sample_id: sample_id.into(),
        }
    }

    /// The 64-bit stream seed for this context.
    pub fn stream_seed(&self) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(self.global_seed.to_le_bytes());
        hasher.update(self.sample_id.as_bytes());
        let digest = hasher.finalize();
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        u64::from_le_bytes(head)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.stream_seed())
    }

    /// A sub-stream for one stage of a pipeline; `tag` is appended to the id
    /// as `"<id>/<tag>"`.
    pub fn child(&self, tag: &str) -> SeedContext {
        SeedContext {
            global_seed: self.global_seed,
            sample_id: format!("{}/{}", self.sample_id, tag),
        }
    }
}

//! Deterministic, named RNG substreams.
//!
//! Every stochastic site in the library (tie-breaking, synthetic generation,
//! intervention sampling) draws from a substream derived from a single root
//! seed plus a list of labels such as `("tie", team_id, trial)`. Substreams
//! are independent of scheduling, so parallel runs reduce to the same numbers
//! as serial ones.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Builder for a named RNG substream.
#[derive(Clone)]
pub struct StreamKey {
    hasher: Sha256,
}

impl StreamKey {
    pub fn new(root_seed: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(root_seed.to_le_bytes());
        StreamKey { hasher }
    }

    /// Append a label component. Components are length-prefixed so that
    /// `("ab", "c")` and `("a", "bc")` derive different streams.
    pub fn with(mut self, part: &str) -> Self {
        self.hasher.update((part.len() as u64).to_le_bytes());
        self.hasher.update(part.as_bytes());
        self
    }

    pub fn with_u64(self, part: u64) -> Self {
        let mut s = self;
        s.hasher.update([0xFEu8]);
        s.hasher.update(part.to_le_bytes());
        s
    }

    /// Finalize into a seeded generator.
    pub fn rng(self) -> ChaCha8Rng {
        let digest = self.hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }
}

/// Shorthand for the common `(purpose, team, trial)` substream.
pub fn substream(root_seed: u64, purpose: &str, team: &str, trial: u64) -> ChaCha8Rng {
    StreamKey::new(root_seed)
        .with(purpose)
        .with(team)
        .with_u64(trial)
        .rng()
}

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Per-attempt seed, a pure function of `(run_seed, scenario, trial, attempt)`
/// so execution order never changes what a stochastic agent does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrialSeed([u8; 32]);

impl TrialSeed {
    pub fn derive(run_seed: u64, scenario_key: &str, trial_index: u64, attempt: u32) -> Self {
        let mut h = Sha256::new();
        h.update(b"dilemma/trial-seed/v1");
        h.update(run_seed.to_le_bytes());
        h.update((scenario_key.len() as u64).to_le_bytes());
        h.update(scenario_key.as_bytes());
        h.update(trial_index.to_le_bytes());
        h.update(attempt.to_le_bytes());
        Self(h.finalize().into())
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.0)
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the only supported generator.
pub const CHACHA8: &str = "chacha8";

/// Named, seeded generator. Replicate `r` uses seed `seed + r` (wrapping),
/// so serial and parallel runs draw identical streams.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RngSpec {
    /// Generator name; only `chacha8` is registered.
    #[serde(default = "default_algorithm")]
    pub algorithm: String,
    /// Base seed.
    pub seed: u64,
}

fn default_algorithm() -> String {
    CHACHA8.to_string()
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            algorithm: default_algorithm(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithm != CHACHA8 {
            return Err(Error::UnknownName {
                kind: "rng algorithm",
                name: self.algorithm.clone(),
                known: CHACHA8.into(),
            });
        }
        Ok(())
    }

    /// Generator for replicate `replicate`.
    pub fn stream(&self, replicate: u64) -> Result<ChaCha8Rng> {
        self.validate()?;
        Ok(ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(replicate)))
    }
}

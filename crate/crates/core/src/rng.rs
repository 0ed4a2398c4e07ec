//! Named, explicitly seeded random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier recorded alongside experiment output.
pub const ALGORITHM_ID: &str = "chacha8";

/// A seed plus the generator it feeds. Cloning restarts nothing: the clone
/// continues from the same stream position.
#[derive(Debug, Clone)]
pub struct RngHandle {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngHandle {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm_id(&self) -> &'static str {
        ALGORITHM_ID
    }

    /// Independent handle for a parallel task: `seed XOR task`.
    pub fn derive(&self, task: u64) -> Self {
        Self::new(derive_seed(self.seed, task))
    }
}

pub fn derive_seed(seed: u64, task: u64) -> u64 {
    seed ^ task
}

impl rand::RngCore for RngHandle {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

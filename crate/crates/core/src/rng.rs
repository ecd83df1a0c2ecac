//! Seeded random streams.
//!
//! Every stochastic component of a run draws from its own ChaCha stream keyed
//! by `(seed, stream)`, so adding draws to one component never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Named stream ids used by the experiment runner.
pub mod streams {
    pub const SPLIT: u64 = 1;
    pub const SEEDING: u64 = 2;
    pub const SELECTION: u64 = 3;
    pub const ORACLE_NOISE: u64 = 4;
    pub const STUDENT: u64 = 5;
    pub const SYNTHETIC: u64 = 6;
}

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

//! Deep Q-learning toolkit for finding short, low-exposure routes across a
//! grid contaminated by point radiation sources, together with a
//! deterministic shortest-path ground truth and trajectory comparison.

pub mod analysis;
pub mod env;
pub mod error;
pub mod explore;
pub mod field;
pub mod frechet;
pub mod nn;
pub mod oracle;
pub mod replay;
pub mod report;
pub mod scenario;
pub mod sync;
pub mod trainer;

pub use error::{ConfigError, InsufficientSamples, NetError, PathError};
pub use scenario::{Cell, Experiment, Scenario, Source, Strategy, SyncMode, TrainConfig};

/// Random number generator used everywhere randomness is needed.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the crate RNG from a seed.
pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}

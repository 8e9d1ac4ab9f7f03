//! Deterministic random streams.
//!
//! Every simulation seed maps to a ChaCha8 generator seeded with
//! `seed_from_u64(seed)`. Independent streams for the same seed are obtained
//! with `set_stream`: stream 0 generates the environment, stream 1 drives the
//! algorithm run (exploration draws, candidate arms and reward noise). Streams
//! depend only on the seed, never on scheduling, so sweeps are reproducible at
//! any parallelism.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type SimRng = ChaCha8Rng;

/// Recorded in experiment metadata.
pub const RNG_NAME: &str = "ChaCha8Rng(seed_from_u64, stream split)";

pub const ENV_STREAM: u64 = 0;
pub const RUN_STREAM: u64 = 1;

pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

//! Seeded random streams for reproducible trials.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream for one trial, derived from the master seed, the
/// instance size and the trial index.
pub fn trial_rng(seed: u64, n: usize, trial: u64) -> ChaCha8Rng {
    let mixed = seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    rng.set_stream(trial);
    rng
}

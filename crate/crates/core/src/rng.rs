//! Deterministic random streams.
//!
//! Every experiment cell owns a private ChaCha8 generator. ChaCha is a
//! counter-based stream cipher, so a `(seed, stream)` pair addresses an
//! independent keystream without any sequential splitting: cell `i` of a run
//! with base seed `s` always draws from `stream(s, i)`, whatever the thread
//! schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for cell `index` of a run seeded with `base_seed`.
pub fn stream(base_seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

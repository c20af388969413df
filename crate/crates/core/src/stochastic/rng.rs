//! Counter-based random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent ChaCha stream `stream` under key `seed`. The generator is a
/// pure function of `(seed, stream)`, so per-path draws do not depend on the
/// order in which paths are scheduled.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

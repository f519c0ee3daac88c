//! Reproducible random streams.
//!
//! Every consumer derives its generator from a master seed and a stream index,
//! so results do not depend on the order in which parallel work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator number `index` of the family seeded by `master`.
pub fn stream(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

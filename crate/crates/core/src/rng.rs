//! Per-path random streams.
//!
//! Path `i` draws from ChaCha8 keyed by the master seed on stream `i`, so a
//! path's numbers depend only on `(master_seed, i)` and never on scheduling.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

pub type PathRng = ChaCha8Rng;

/// Stream for path `path_index` under `master_seed`.
pub fn path_rng(master_seed: u64, path_index: u64) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path_index);
    rng
}

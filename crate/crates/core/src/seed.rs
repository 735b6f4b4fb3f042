//! Counter-based random substreams derived from one root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags for the root-seed split.
pub mod purpose {
    pub const GEOMETRY: u64 = 1;
    pub const INIT: u64 = 2;
    pub const SENSITIVITY: u64 = 3;
}

/// Independent generator for `(root, purpose, index)`; does not depend on
/// how many other streams were consumed before.
pub fn substream(root: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

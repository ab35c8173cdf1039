//! Seed derivation. Every random stream (per-layer wiring, per-layer
//! parameters, per-step sampling) gets its own generator seeded from the
//! root seed, so results do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type DetRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes a root seed with a stream tag and an index.
pub fn derive_seed(root: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(root) ^ tag.rotate_left(17)) ^ index)
}

pub fn stream(root: u64, tag: u64, index: u64) -> DetRng {
    DetRng::seed_from_u64(derive_seed(root, tag, index))
}

/// Stream tags.
pub mod tags {
    pub const WIRING: u64 = 0x5749_5245;
    pub const PARAMS: u64 = 0x5041_5241;
    pub const DATA_ORDER: u64 = 0x4441_5441;
    pub const REGULARIZE: u64 = 0x5245_4755;
    pub const PROBE: u64 = 0x5052_4f42;
    pub const INTERVENE: u64 = 0x494e_5456;
    pub const DROPOUT: u64 = 0x4452_4f50;
}

//! Seeded random streams.
//!
//! The generator is ChaCha8, a counter-based cipher: a `(seed, stream)` pair
//! selects an independent keystream, so each experiment phase draws from its
//! own stream and changing the number of draws in one phase leaves every
//! other phase untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers. Values are part of the output contract: changing one
/// changes the generated data for that phase.
pub mod stream {
    pub const CLASS_CENTERS: u64 = 0x01;
    pub const SAMPLES: u64 = 0x02;
    pub const DESIGN: u64 = 0x11;
    pub const TARGETS: u64 = 0x12;
    pub const REGULARIZATION: u64 = 0x13;
    pub const INIT: u64 = 0x21;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

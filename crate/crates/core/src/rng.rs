//! Seeded, replayable random streams.
//!
//! Every random consumer in the crate draws from a ChaCha8 generator addressed
//! by `(seed, stream)`. ChaCha is counter based, so a stream can be replayed
//! exactly from its address alone and independent streams (one per chain or
//! sweep cell) never overlap.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

/// Address of one random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamId {
    pub seed: u64,
    pub stream: u64,
}

impl StreamId {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> StreamRng {
        stream_rng(self.seed, self.stream)
    }
}

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Name recorded in output metadata so runs can be replayed.
pub const GENERATOR_NAME: &str = "chacha8";

/// Mix two stream coordinates into one stream number.
pub fn substream(base: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the combined word
    let mut z = base
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_add(1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

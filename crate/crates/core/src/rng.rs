//! Keyed random streams.
//!
//! A run never shares one generator between clients or rounds. Each consumer asks
//! for the stream identified by `(seed, purpose, a, b)`; the same key always yields
//! the same sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. Part of the key so that, e.g., the capacity draw of
/// client 3 in round 7 never aliases its training shuffle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    SyntheticClient = 1,
    Partition = 2,
    Split = 3,
    Profile = 4,
    Capacity = 5,
    Selection = 6,
    Training = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Collapses a stream key into a single 64-bit seed.
pub fn stream_seed(seed: u64, purpose: Purpose, a: u64, b: u64) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ purpose as u64);
    h = splitmix64(h ^ a);
    splitmix64(h ^ b.rotate_left(32))
}

pub fn stream(seed: u64, purpose: Purpose, a: u64, b: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, purpose, a, b))
}

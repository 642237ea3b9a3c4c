//! Seeded random streams.
//!
//! Every (replicate, expert) pair owns one independent ChaCha8 stream. Its
//! seed is derived from the master seed by chaining SplitMix64 finalizers:
//!
//! ```text
//! seed(master, replicate, expert) =
//!     mix(mix(mix(master) ^ replicate) ^ (expert + 1))
//! ```
//!
//! where `mix` is the SplitMix64 output function. Two runs with the same
//! master seed therefore see the same draws on every expert, whatever policy
//! consumes them and whatever order replicates are scheduled in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The stream type handed to samplers.
pub type Stream = ChaCha8Rng;

/// SplitMix64 output function.
pub fn mix(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream dedicated to `(replicate, expert)`.
pub fn stream_seed(master_seed: u64, replicate: u64, expert: usize) -> u64 {
    mix(mix(mix(master_seed) ^ replicate) ^ (expert as u64 + 1))
}

/// Opens the stream dedicated to `(replicate, expert)`.
pub fn expert_stream(master_seed: u64, replicate: u64, expert: usize) -> Stream {
    ChaCha8Rng::seed_from_u64(stream_seed(master_seed, replicate, expert))
}

/// A free-standing stream for auxiliary randomness (test fixtures, harnesses).
pub fn seeded(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(mix(seed))
}

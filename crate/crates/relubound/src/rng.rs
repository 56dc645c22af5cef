//! Reproducible random streams.
//!
//! All randomness in the crate flows from a single user-provided seed. Every
//! consumer (root sampling, each branch-and-bound subdomain, each PGD restart
//! batch) gets its own counter-indexed stream, so streams are independent of
//! one another and of the order in which domains are processed.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive the `stream`-th random stream of a master seed.
///
/// Streams with different counters never overlap (they select different
/// ChaCha stream parameters for the same key), so callers may hand them to
/// concurrent workers without coordination.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

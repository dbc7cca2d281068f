//! Counter-based random streams.
//!
//! Every draw is a pure function of `(seed, domain, index)`: the ChaCha key is
//! built from the seed and a domain tag, and the index selects the stream.
//! Parallel consumers therefore see the same numbers regardless of how work
//! is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep independent consumers of one seed from sharing streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Lambda = 1,
    Pairs = 2,
    Offsets = 3,
    Fixture = 4,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

//! Seeded random streams.
//!
//! Every simulation draws from ChaCha8 keyed by `(seed, domain)` with the
//! 64-bit ChaCha stream id set to the path (or trial) index. A path's draws
//! therefore depend only on its own index, so results are identical however
//! the paths are split across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed used when a run does not supply one.
pub const DEFAULT_SEED: u64 = 42;

/// Separates the random streams of unrelated simulations sharing one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    TerminalPrices = 1,
    PricePaths = 2,
    Channel = 3,
    MarkovChain = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for stream `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let key = splitmix64(seed ^ splitmix64(domain as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

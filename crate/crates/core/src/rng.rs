//! Seed derivation for reproducible, order-independent Monte Carlo trials.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over arbitrary bytes. Used to fingerprint scenarios and codes.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Deterministic generator for one work unit, keyed by the run seed, a
/// scenario fingerprint, a stream label and the trial index.
pub fn trial_rng(master_seed: u64, scenario: u64, stream: u64, trial: u64) -> SimRng {
    let mut h = splitmix64(master_seed);
    for part in [scenario, stream, trial] {
        h = splitmix64(h ^ part);
    }
    SimRng::seed_from_u64(h)
}

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

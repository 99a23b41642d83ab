//! Counter-keyed random substreams.
//!
//! Every random quantity is drawn from a ChaCha8 stream keyed by
//! `(seed, domain, index)`. A replicate or simulation run therefore depends
//! only on its own index, never on scheduling or on other replicates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags separating the independent uses of one master seed.
pub mod domain {
    pub const WILD: u64 = 0x5749_4c44;
    pub const PARAMETRIC: u64 = 0x5041_5241;
    pub const SIM_DATA: u64 = 0x5349_4d44;
    pub const SIM_BOOT: u64 = 0x5349_4d42;
}

/// Generator for `(seed, domain, index)`.
pub fn substream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    key[24..].copy_from_slice(b"mctp-rng");
    ChaCha8Rng::from_seed(key)
}

/// Derives a child seed, e.g. the bootstrap seed of one simulation run.
pub fn child_seed(seed: u64, domain: u64, index: u64) -> u64 {
    use rand::RngCore;
    substream(seed, domain, index).next_u64()
}

//! Seed derivation and keyed uniform samples.
//!
//! Per-event randomness (losses, forwarding draws, crashes) is a pure function
//! of the run seed and the event's identity, so changing one decision in a run
//! does not shift the samples seen by unrelated events.

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent child seed for stream `index` of `parent`.
pub fn derive(parent: u64, index: u64) -> u64 {
    mix64(parent ^ mix64(index))
}

pub(crate) fn keyed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(seed, |acc, &p| derive(acc, p))
}

/// Uniform sample in [0, 1) from 53 high bits.
pub(crate) fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) mod stream {
    pub const TOPOLOGY: u64 = 1;
    pub const CRASH: u64 = 2;
    pub const ORIGIN: u64 = 3;
    pub const LOSS: u64 = 4;
    pub const FORWARD: u64 = 5;
    pub const DELAY: u64 = 6;
}

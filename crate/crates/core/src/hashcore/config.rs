use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default offset between the bucket seed and the sign seed.
pub const SIGN_SEED_XOR: u32 = 0x5F37_5A86;

pub const MIN_BITS: u32 = 1;
pub const MAX_BITS: u32 = 30;

/// Parameters of the signed hash pair `(h, xi)`: `m = 2^bits` buckets, `h`
/// seeded by `bucket_seed` and `xi` by `sign_seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HashConfig {
    bits: u32,
    bucket_seed: u32,
    sign_seed: u32,
}

impl HashConfig {
    /// Config with the default sign seed `bucket_seed ^ 0x5F375A86`.
    pub fn new(bits: u32, bucket_seed: u32) -> Result<Self> {
        Self::with_seeds(bits, bucket_seed, bucket_seed ^ SIGN_SEED_XOR)
    }

    pub fn with_seeds(bits: u32, bucket_seed: u32, sign_seed: u32) -> Result<Self> {
        if !(MIN_BITS..=MAX_BITS).contains(&bits) {
            return Err(Error::input(format!(
                "bits must be in [{MIN_BITS}, {MAX_BITS}], got {bits}"
            )));
        }
        if bucket_seed == sign_seed {
            return Err(Error::input("bucket_seed and sign_seed must differ"));
        }
        Ok(HashConfig {
            bits,
            bucket_seed,
            sign_seed,
        })
    }

    /// The config used for Monte Carlo trial `seed`: the 64-bit trial seed is
    /// passed through splitmix64 and truncated to the bucket seed.
    pub fn for_trial(bits: u32, seed: u64) -> Result<Self> {
        Self::new(bits, splitmix64(seed) as u32)
    }

    /// A second, independent config for the same trial (the `(h', xi')` pair
    /// of a two-sided sketch).
    pub fn for_trial_secondary(bits: u32, seed: u64) -> Result<Self> {
        Self::new(bits, (splitmix64(seed) >> 32) as u32)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn m(&self) -> usize {
        1usize << self.bits
    }

    pub fn mask(&self) -> u32 {
        ((1u64 << self.bits) - 1) as u32
    }

    pub fn bucket_seed(&self) -> u32 {
        self.bucket_seed
    }

    pub fn sign_seed(&self) -> u32 {
        self.sign_seed
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

//! Seed-shared hash pair used by every sampler instance.
//!
//! All switches in a measurement epoch must evaluate identical hash
//! functions, so both members of the pair are derived deterministically from
//! one master seed: `h1` picks the slot an identifier competes in, `h2`
//! assigns its sampling rank.

use crate::{Error, Result};

/// Largest supported slot-index bit-width.
pub const MAX_SLOT_BITS: u32 = 30;

const H1_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const H2_SALT: u64 = 0xc2b2_ae3d_27d4_eb4f;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// SplitMix64 finalizer; bijective on `u64`, good bit diffusion.
#[inline]
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded FNV-1a over the bytes, diffused with a SplitMix64 finalizer.
#[inline]
fn hash_bytes(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET ^ seed;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

/// The pair (`h1`, `h2`) shared by all switches of one measurement.
///
/// Two `HashPair` values built from the same `(seed, m)` are
/// indistinguishable: outputs are a pure function of the identifier bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashPair {
    seed: u64,
    m: u32,
    h1_seed: u64,
    h2_seed: u64,
}

impl HashPair {
    /// Builds the pair from a master seed and a slot bit-width `m`
    /// (slot count `2^m`). Rejects `m` outside `1..=30`.
    pub fn new(seed: u64, m: u32) -> Result<Self> {
        if m == 0 || m > MAX_SLOT_BITS {
            return Err(Error::InvalidParam(format!(
                "slot bit-width m={m} outside 1..={MAX_SLOT_BITS}"
            )));
        }
        Ok(Self {
            seed,
            m,
            h1_seed: splitmix64(seed ^ H1_SALT),
            h2_seed: splitmix64(seed ^ H2_SALT),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Slot count `2^m`.
    pub fn slot_count(&self) -> usize {
        1usize << self.m
    }

    /// Slot index of `id`, in `[0, 2^m)`.
    ///
    /// Uses the top `m` bits of the 64-bit hash so it shares no low-bit
    /// structure with the rank hash.
    #[inline]
    pub fn slot_of(&self, id: &[u8]) -> u32 {
        (hash_bytes(self.h1_seed, id) >> (64 - self.m)) as u32
    }

    /// Sampling rank of `id`: a 32-bit fixed-point value `r` in
    /// `[1, 2^32 - 1]`, read as `r / 2^32` in `(0, 1)`.
    ///
    /// The all-ones conceptual value `2^32` (exactly 1.0) is reserved as the
    /// empty-slot sentinel and is never produced for a real identifier, so a
    /// stored occupant always wins against an empty slot under strict-less
    /// comparison.
    #[inline]
    pub fn rank_of(&self, id: &[u8]) -> u32 {
        (hash_bytes(self.h2_seed, id) % 0xffff_ffff) as u32 + 1
    }
}

/// Decodes a stored rank to its unit-interval value.
#[inline]
pub fn rank_to_unit(rank: u32) -> f64 {
    f64::from(rank) / 4_294_967_296.0
}

/// Conceptual rank of an empty slot.
pub const EMPTY_SLOT_RANK: f64 = 1.0;

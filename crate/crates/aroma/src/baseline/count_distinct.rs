//! Mergeable distinct counter: `2^b` registers each holding the longest
//! leading-zero run seen among the hashes routed to it, with a
//! linear-counting correction for small cardinalities.
//!
//! Merging takes the element-wise register maximum, so the merged state is
//! exactly the state of one instance that saw the union of both streams.

use crate::hash::splitmix64;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"ACDS";
const FORMAT_VERSION: u8 = 1;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Register-count bounds; 4 keeps the bias constant meaningful, 20 caps
/// memory at 1 MiB per instance.
pub const MIN_REGISTER_BITS: u32 = 4;
pub const MAX_REGISTER_BITS: u32 = 20;

/// Smallest power-of-two register count whose standard error
/// `1.04 / sqrt(m)` is at most `epsilon`.
pub fn registers_for_epsilon(epsilon: f64) -> Result<u32> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParam(format!(
            "epsilon {epsilon} outside (0, 1)"
        )));
    }
    let need = (1.04 / epsilon).powi(2);
    let mut b = MIN_REGISTER_BITS;
    while ((1u64 << b) as f64) < need {
        b += 1;
        if b > MAX_REGISTER_BITS {
            return Err(Error::InvalidParam(format!(
                "epsilon {epsilon} needs more than 2^{MAX_REGISTER_BITS} registers"
            )));
        }
    }
    Ok(b)
}

/// The mergeable `(epsilon, delta)` distinct counter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountDistinctSketch {
    b: u32,
    seed: u64,
    registers: Vec<u8>,
}

impl CountDistinctSketch {
    /// Fresh counter with `2^b` registers.
    pub fn new(b: u32, seed: u64) -> Result<Self> {
        if !(MIN_REGISTER_BITS..=MAX_REGISTER_BITS).contains(&b) {
            return Err(Error::InvalidParam(format!(
                "register bits {b} outside {MIN_REGISTER_BITS}..={MAX_REGISTER_BITS}"
            )));
        }
        Ok(Self {
            b,
            seed: splitmix64(seed ^ 0x5bd1_e995_9d1b_54a5),
            registers: vec![0; 1 << b],
        })
    }

    /// Fresh counter sized for a target relative error.
    pub fn with_epsilon(epsilon: f64, seed: u64) -> Result<Self> {
        Self::new(registers_for_epsilon(epsilon)?, seed)
    }

    pub fn register_bits(&self) -> u32 {
        self.b
    }

    pub fn register_count(&self) -> usize {
        self.registers.len()
    }

    /// Inserts an item; duplicates never change the state.
    pub fn add(&mut self, item: &[u8]) {
        let mut h = FNV_OFFSET ^ self.seed;
        for &byte in item {
            h ^= u64::from(byte);
            h = h.wrapping_mul(FNV_PRIME);
        }
        h = splitmix64(h);
        let idx = (h >> (64 - self.b)) as usize;
        let rest = h << self.b;
        // Leading-zero run of the remaining 64-b bits, plus one; `rest` of
        // zero means all of them were zero.
        let rho = if rest == 0 {
            (64 - self.b + 1) as u8
        } else {
            (rest.leading_zeros() + 1) as u8
        };
        if rho > self.registers[idx] {
            self.registers[idx] = rho;
        }
    }

    /// Distinct-count estimate.
    pub fn query(&self) -> f64 {
        let m = self.registers.len() as f64;
        // 2^-r for every reachable register value; registers cap at 64-b+1.
        let mut inv_pow = [0.0f64; 62];
        for (r, v) in inv_pow.iter_mut().enumerate() {
            *v = f64::from_bits((1023u64 - r as u64) << 52);
        }
        let mut sum = 0.0;
        let mut zeros = 0u32;
        for &r in &self.registers {
            sum += inv_pow[usize::from(r)];
            if r == 0 {
                zeros += 1;
            }
        }
        let alpha = match self.registers.len() {
            16 => 0.673,
            32 => 0.697,
            64 => 0.709,
            n => 0.7213 / (1.0 + 1.079 / n as f64),
        };
        let raw = alpha * m * m / sum;
        // Linear counting handles the small range, where the raw harmonic
        // estimate is badly biased.
        if raw <= 2.5 * m && zeros > 0 {
            m * (m / f64::from(zeros)).ln()
        } else {
            raw
        }
    }

    /// Merges `other` into `self` by element-wise register maximum.
    /// Requires identical `(b, seed)`.
    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.b != other.b || self.seed != other.seed {
            return Err(Error::Incompatible(
                "distinct counters differ in register count or seed".into(),
            ));
        }
        for (a, &b) in self.registers.iter_mut().zip(&other.registers) {
            if b > *a {
                *a = b;
            }
        }
        Ok(())
    }

    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    /// Serializes as `"ACDS" version b reserved[2] seed registers`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.registers.len());
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.push(self.b as u8);
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.registers);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 {
            return Err(Error::Format("distinct counter blob too short".into()));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("bad distinct counter magic".into()));
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", bytes[4])));
        }
        let b = u32::from(bytes[5]);
        if !(MIN_REGISTER_BITS..=MAX_REGISTER_BITS).contains(&b) {
            return Err(Error::Format(format!("register bits {b} out of range")));
        }
        let seed = u64::from_le_bytes(bytes[8..16].try_into().expect("checked length"));
        let expect = 16 + (1usize << b);
        if bytes.len() != expect {
            return Err(Error::Format(format!(
                "distinct counter blob length {} != expected {expect}",
                bytes.len()
            )));
        }
        let max_rho = (64 - b + 1) as u8;
        let registers = bytes[16..].to_vec();
        if registers.iter().any(|&r| r > max_rho) {
            return Err(Error::Format("register value out of range".into()));
        }
        Ok(Self { b, seed, registers })
    }
}

/// Network-wide distinct-packet count: merge every router's counter and
/// query once. Packets observed by several routers count once.
pub fn volume_estimate(sketches: &[CountDistinctSketch]) -> Result<f64> {
    let mut iter = sketches.iter();
    let first = iter.next().ok_or(Error::EmptySample)?;
    let mut merged = first.clone();
    for sk in iter {
        merged.merge_from(sk)?;
    }
    Ok(merged.query())
}

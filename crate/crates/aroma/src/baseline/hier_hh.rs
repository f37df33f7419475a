//! Hierarchical distributed heavy hitters over a `u`-bit identifier space.
//!
//! Each router keeps `u + 1` frequency matrices, one per prefix level; a
//! packet is inserted at every level under its masked identifier. After
//! merging the routers' hierarchies, the controller walks down from the root
//! keeping the best-estimated prefixes at each level, which yields a bounded
//! candidate set of flows together with their frequency estimates.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::baseline::cm_distinct::CmDistinct;
use crate::hash::splitmix64;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"AHHH";
const FORMAT_VERSION: u8 = 1;
const LEVEL_SALT: u64 = 0x8ae8_1f6c_2d65_7d1b;

/// Maximum identifier bit-width. Memory grows linearly in `u`, so wide
/// universes want loose `(epsilon, delta)`.
pub const MAX_UNIVERSE_BITS: u32 = 48;

/// Bit mask selecting the level-`q` prefix: `u - q` high ones, `q` low
/// zeros, within a `u`-bit identifier.
pub fn prefix_mask(u: u32, q: u32) -> u64 {
    debug_assert!(q <= u && u <= 63);
    if q >= u {
        0
    } else {
        ((1u64 << (u - q)) - 1) << q
    }
}

/// Both one-bit extensions of each level-`q+1` prefix down to level `q`:
/// `{p, p | (1 << q)}`.
pub fn descendants(prefixes: &BTreeSet<u64>, q: u32) -> BTreeSet<u64> {
    let mut out = BTreeSet::new();
    for &p in prefixes {
        out.insert(p);
        out.insert(p | (1u64 << q));
    }
    out
}

/// Result of a heavy-hitter query.
#[derive(Clone, Debug, PartialEq)]
pub struct HhhReport {
    /// Candidate flows whose estimate met the reporting threshold.
    pub reported: Vec<u64>,
    /// The reporting threshold that was applied.
    pub threshold: f64,
    /// True when the threshold formula went non-positive (theta too small
    /// for the configured accuracy); all candidates are reported then.
    pub threshold_floored: bool,
}

#[derive(Clone, Debug, PartialEq)]
struct Summary {
    v_hat: f64,
    top: Vec<Vec<u64>>, // per level, sorted ascending
    candidates: BTreeMap<u64, f64>,
}

/// The per-router (and, after merging, controller) hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct HierHh {
    u: u32,
    epsilon: f64,
    delta: f64,
    eps_aa: f64,
    top_k: usize,
    seed: u64,
    levels: Vec<CmDistinct>,
    summary: Option<Summary>,
}

impl HierHh {
    /// Builds the hierarchy for identifiers in `[0, 2^u)`. Level matrices
    /// get accuracy `epsilon / 2` and failure probability
    /// `1 / (eps^-1 * u * log2(1/delta))`.
    pub fn new(u: u32, epsilon: f64, delta: f64, seed: u64) -> Result<Self> {
        if u == 0 || u > MAX_UNIVERSE_BITS {
            return Err(Error::InvalidParam(format!(
                "universe bits {u} outside 1..={MAX_UNIVERSE_BITS}"
            )));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParam(format!(
                "epsilon {epsilon} outside (0, 1)"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParam(format!("delta {delta} outside (0, 1)")));
        }
        let psi = (1.0 / epsilon) * f64::from(u) * (1.0 / delta).log2();
        if psi <= 1.0 {
            return Err(Error::InvalidParam(format!(
                "parameters give a per-level failure probability 1/{psi} >= 1"
            )));
        }
        let eps_aa = epsilon / 2.0;
        let levels = (0..=u)
            .map(|q| {
                CmDistinct::new(
                    eps_aa,
                    1.0 / psi,
                    splitmix64(seed ^ LEVEL_SALT.wrapping_add(u64::from(q))),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            u,
            epsilon,
            delta,
            eps_aa,
            top_k: (1.0 / eps_aa).ceil() as usize,
            seed,
            levels,
            summary: None,
        })
    }

    pub fn universe_bits(&self) -> u32 {
        self.u
    }

    /// Per-level candidate budget `ceil(1 / eps_aa)`.
    pub fn top_k(&self) -> usize {
        self.top_k
    }

    /// Inserts a packet of flow `x`. The serial number pairs the unique
    /// packet id with the unmasked flow id, since packets of different
    /// flows sharing a prefix may otherwise collide at upper levels.
    pub fn add(&mut self, x: u64, pid: u64) -> Result<()> {
        if self.u < 64 && x >= (1u64 << self.u) {
            return Err(Error::InvalidParam(format!(
                "flow id {x} outside the {}-bit universe",
                self.u
            )));
        }
        let mut serial = [0u8; 16];
        serial[..8].copy_from_slice(&pid.to_be_bytes());
        serial[8..].copy_from_slice(&x.to_be_bytes());
        for q in 0..=self.u {
            let masked = x & prefix_mask(self.u, q);
            self.levels[q as usize].add(&masked.to_be_bytes(), &serial);
        }
        self.summary = None;
        Ok(())
    }

    /// Level-wise merge of another router's hierarchy; clears any previous
    /// finalization.
    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.u != other.u
            || self.epsilon != other.epsilon
            || self.delta != other.delta
            || self.seed != other.seed
        {
            return Err(Error::Incompatible(
                "hierarchies differ in universe, parameters, or seed".into(),
            ));
        }
        for (a, b) in self.levels.iter_mut().zip(&other.levels) {
            a.merge_from(b)?;
        }
        self.summary = None;
        Ok(())
    }

    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    /// Walks the prefix tree top-down, keeping at most `top_k` prefixes per
    /// level (largest estimates first, ties to the smaller prefix), and
    /// stores the surviving flows with their estimates.
    pub fn finalize(&mut self) {
        let root = 0u64.to_be_bytes();
        let v_hat = self.levels[self.u as usize].query(&root);
        let mut top: Vec<Vec<u64>> = vec![Vec::new(); (self.u + 1) as usize];
        top[self.u as usize] = vec![0];
        for q in (0..self.u).rev() {
            let parents: BTreeSet<u64> = top[(q + 1) as usize].iter().copied().collect();
            let mut scored: Vec<(u64, f64)> = descendants(&parents, q)
                .into_iter()
                .map(|p| {
                    let est = self.levels[q as usize].query(&p.to_be_bytes());
                    (p, est)
                })
                .collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            scored.truncate(self.top_k);
            let mut keep: Vec<u64> = scored.into_iter().map(|(p, _)| p).collect();
            keep.sort_unstable();
            top[q as usize] = keep;
        }
        let candidates: BTreeMap<u64, f64> = top[0]
            .iter()
            .map(|&x| (x, self.levels[0].query(&x.to_be_bytes())))
            .collect();
        self.summary = Some(Summary {
            v_hat,
            top,
            candidates,
        });
    }

    fn summary(&self) -> Result<&Summary> {
        self.summary.as_ref().ok_or(Error::NotFinalized)
    }

    /// Estimated stream size (root-level query).
    pub fn volume(&self) -> Result<f64> {
        Ok(self.summary()?.v_hat)
    }

    /// Surviving flows and their frequency estimates.
    pub fn candidates(&self) -> Result<&BTreeMap<u64, f64>> {
        Ok(&self.summary()?.candidates)
    }

    /// Kept prefixes at level `q` (ascending).
    pub fn top_level(&self, q: u32) -> Result<&[u64]> {
        Ok(&self.summary()?.top[q as usize])
    }

    /// Candidates whose estimate reaches the reporting threshold
    /// `V * (theta/(1+eps) - eps*(1+eps))` with `eps = epsilon/2`. A
    /// non-positive threshold reports everything and sets the flag.
    pub fn query(&self, theta: f64) -> Result<HhhReport> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParam(format!("theta {theta} outside (0, 1)")));
        }
        let s = self.summary()?;
        let e = self.eps_aa;
        let threshold = s.v_hat * (theta / (1.0 + e) - e * (1.0 + e));
        let floored = threshold <= 0.0;
        let reported = s
            .candidates
            .iter()
            .filter(|(_, est)| floored || **est >= threshold)
            .map(|(x, _)| *x)
            .collect();
        Ok(HhhReport {
            reported,
            threshold,
            threshold_floored: floored,
        })
    }

    /// Stored estimate for candidate flows, 0 for everything else.
    pub fn freq_est(&self, x: u64) -> Result<f64> {
        Ok(self.summary()?.candidates.get(&x).copied().unwrap_or(0.0))
    }

    /// Serializes the pre-finalization router state:
    /// `"AHHH" version u reserved[2] epsilon delta seed` then the level
    /// matrices, each with a u32 length prefix.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.push(self.u as u8);
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&self.epsilon.to_le_bytes());
        out.extend_from_slice(&self.delta.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for level in &self.levels {
            let blob = level.to_bytes();
            out.extend_from_slice(&(blob.len() as u32).to_le_bytes());
            out.extend_from_slice(&blob);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 32 {
            return Err(Error::Format("hierarchy blob too short".into()));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("bad hierarchy magic".into()));
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", bytes[4])));
        }
        let u = u32::from(bytes[5]);
        let epsilon = f64::from_le_bytes(bytes[8..16].try_into().expect("checked length"));
        let delta = f64::from_le_bytes(bytes[16..24].try_into().expect("checked length"));
        let seed = u64::from_le_bytes(bytes[24..32].try_into().expect("checked length"));
        let mut out = Self::new(u, epsilon, delta, seed)
            .map_err(|e| Error::Format(format!("bad stored parameters: {e}")))?;
        let mut rest = &bytes[32..];
        for level in out.levels.iter_mut() {
            if rest.len() < 4 {
                return Err(Error::Format("truncated hierarchy blob".into()));
            }
            let len = u32::from_le_bytes(rest[..4].try_into().expect("checked length")) as usize;
            rest = &rest[4..];
            if rest.len() < len {
                return Err(Error::Format("truncated hierarchy level".into()));
            }
            *level = CmDistinct::from_bytes(&rest[..len])?;
            rest = &rest[len..];
        }
        if !rest.is_empty() {
            return Err(Error::Format("trailing bytes after hierarchy".into()));
        }
        Ok(out)
    }
}

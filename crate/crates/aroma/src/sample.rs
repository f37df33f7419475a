//! The per-switch sampler: `2^m` slots, each keeping the identifier with the
//! minimal rank among those hashed to it.
//!
//! The final state is a pure function of the *set* of identifiers added, so
//! any number of switches observing overlapping substreams merge into exactly
//! the state of a single switch that saw the union.

use crate::flow::{packet_sample_id, PacketRecord, MAX_ID_LEN};
use crate::hash::{rank_to_unit, HashPair, EMPTY_SLOT_RANK};
use crate::{Error, Result};

/// What identifier competes for slots: unique packet ids or flow ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMode {
    Packet,
    Flow,
}

impl SampleMode {
    fn code(self) -> u8 {
        match self {
            SampleMode::Packet => 0,
            SampleMode::Flow => 1,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(SampleMode::Packet),
            1 => Ok(SampleMode::Flow),
            other => Err(Error::Format(format!("unknown sample mode byte {other}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct SlotEntry {
    rank: u32,
    len: u8,
    id: [u8; MAX_ID_LEN],
}

impl SlotEntry {
    fn id_bytes(&self) -> &[u8] {
        &self.id[..self.len as usize]
    }
}

/// A non-empty slot as reported by [`SampleSketch::sample_ids`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleEntry<'a> {
    pub slot: u32,
    pub rank: u32,
    pub id: &'a [u8],
}

const MAGIC: &[u8; 4] = b"ARMS";
const FORMAT_VERSION: u8 = 1;
const EMPTY_RANK_FIELD: u32 = 0xffff_ffff;
const HEADER_LEN: usize = 16;
const RECORD_LEN: usize = 4 + 1 + MAX_ID_LEN;

/// The per-switch sampling structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSketch {
    mode: SampleMode,
    hp: HashPair,
    slots: Vec<Option<SlotEntry>>,
    filled: u32,
}

impl SampleSketch {
    /// Fresh sampler with `2^m` empty slots.
    pub fn new(mode: SampleMode, m: u32, seed: u64) -> Result<Self> {
        let hp = HashPair::new(seed, m)?;
        Ok(Self {
            mode,
            hp,
            slots: vec![None; hp.slot_count()],
            filled: 0,
        })
    }

    pub fn mode(&self) -> SampleMode {
        self.mode
    }

    pub fn m(&self) -> u32 {
        self.hp.m()
    }

    pub fn seed(&self) -> u64 {
        self.hp.seed()
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn hash_pair(&self) -> &HashPair {
        &self.hp
    }

    /// Observes one packet. In packet mode the unique `pid` competes (the
    /// stored id carries `pid.flow_key` so flows stay attributable); in flow
    /// mode the canonical flow id competes and is stored as-is.
    pub fn add(&mut self, p: &PacketRecord) {
        match self.mode {
            SampleMode::Packet => {
                let hash_input = p.pid.to_be_bytes();
                let stored = packet_sample_id(p);
                self.add_raw(&hash_input, &stored);
            }
            SampleMode::Flow => {
                let bytes = p.fid.as_bytes();
                // Hash input and stored id coincide in flow mode.
                let mut stored = [0u8; MAX_ID_LEN];
                stored[..bytes.len()].copy_from_slice(bytes);
                self.add_raw(bytes, &stored[..bytes.len()]);
            }
        }
    }

    /// Slot competition on raw bytes: `hash_input` drives `h1`/`h2`,
    /// `stored_id` is what the winning slot retains. Replacement is
    /// strict-less, so re-adding an identifier is a no-op and equal-rank
    /// challengers never evict an incumbent.
    pub(crate) fn add_raw(&mut self, hash_input: &[u8], stored_id: &[u8]) {
        debug_assert!(stored_id.len() <= MAX_ID_LEN);
        let slot = self.hp.slot_of(hash_input) as usize;
        let rank = self.hp.rank_of(hash_input);
        let replace = match &self.slots[slot] {
            None => true,
            Some(e) => rank < e.rank,
        };
        if replace {
            if self.slots[slot].is_none() {
                self.filled += 1;
            }
            let mut id = [0u8; MAX_ID_LEN];
            id[..stored_id.len()].copy_from_slice(stored_id);
            self.slots[slot] = Some(SlotEntry {
                rank,
                len: stored_id.len() as u8,
                id,
            });
        }
    }

    /// Number of non-empty slots (the achieved sample size).
    pub fn filled_count(&self) -> u32 {
        self.filled
    }

    /// Merges `other` into `self`: per-slot minimum by rank, incumbent kept
    /// on an exact tie. Requires identical `(mode, m, seed)`.
    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.mode != other.mode || self.hp != other.hp {
            return Err(Error::Incompatible(format!(
                "cannot merge (mode {:?}, m {}, seed {}) with (mode {:?}, m {}, seed {})",
                self.mode,
                self.m(),
                self.seed(),
                other.mode,
                other.m(),
                other.seed()
            )));
        }
        for (mine, theirs) in self.slots.iter_mut().zip(&other.slots) {
            let take = match (&mine, theirs) {
                (_, None) => false,
                (None, Some(_)) => true,
                (Some(a), Some(b)) => b.rank < a.rank,
            };
            if take {
                if mine.is_none() {
                    self.filled += 1;
                }
                *mine = *theirs;
            }
        }
        Ok(())
    }

    /// Non-consuming merge of two compatible sketches.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    /// Non-empty slots in slot order.
    pub fn sample_ids(&self) -> Vec<SampleEntry<'_>> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| {
                s.as_ref().map(|e| SampleEntry {
                    slot: i as u32,
                    rank: e.rank,
                    id: e.id_bytes(),
                })
            })
            .collect()
    }

    /// Sum of unit-interval slot ranks, empty slots contributing exactly 1.0.
    pub fn rank_sum(&self) -> f64 {
        self.slots
            .iter()
            .map(|s| match s {
                Some(e) => rank_to_unit(e.rank),
                None => EMPTY_SLOT_RANK,
            })
            .sum()
    }

    /// Serializes to the interchange format: little-endian header
    /// `"ARMS" version mode m reserved seed`, then `2^m` records of
    /// `{rank: u32, id_len: u8, id: 16 bytes}`. Occupied slots store
    /// `rank - 1`; empty slots store `0xFFFFFFFF` with `id_len = 0`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.slots.len() * RECORD_LEN);
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.push(self.mode.code());
        out.push(self.m() as u8);
        out.push(0); // reserved
        out.extend_from_slice(&self.seed().to_le_bytes());
        for slot in &self.slots {
            match slot {
                Some(e) => {
                    out.extend_from_slice(&(e.rank - 1).to_le_bytes());
                    out.push(e.len);
                    out.extend_from_slice(&e.id);
                }
                None => {
                    out.extend_from_slice(&EMPTY_RANK_FIELD.to_le_bytes());
                    out.push(0);
                    out.extend_from_slice(&[0u8; MAX_ID_LEN]);
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format("sketch blob shorter than header".into()));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("bad sketch magic".into()));
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", bytes[4])));
        }
        let mode = SampleMode::from_code(bytes[5])?;
        let m = u32::from(bytes[6]);
        let seed = u64::from_le_bytes(bytes[8..16].try_into().expect("checked length"));
        let mut sketch = Self::new(mode, m, seed)?;
        let expect = HEADER_LEN + sketch.slot_count() * RECORD_LEN;
        if bytes.len() != expect {
            return Err(Error::Format(format!(
                "sketch blob length {} != expected {expect}",
                bytes.len()
            )));
        }
        for (i, rec) in bytes[HEADER_LEN..].chunks_exact(RECORD_LEN).enumerate() {
            let rank_field = u32::from_le_bytes(rec[..4].try_into().expect("checked length"));
            let len = rec[4];
            if len == 0 {
                if rank_field != EMPTY_RANK_FIELD {
                    return Err(Error::Format(format!(
                        "slot {i}: empty slot with rank field {rank_field:#x}"
                    )));
                }
                continue;
            }
            if usize::from(len) > MAX_ID_LEN {
                return Err(Error::Format(format!("slot {i}: id length {len} > 16")));
            }
            if rank_field == EMPTY_RANK_FIELD {
                return Err(Error::Format(format!(
                    "slot {i}: occupied slot with sentinel rank"
                )));
            }
            let mut id = [0u8; MAX_ID_LEN];
            id.copy_from_slice(&rec[5..]);
            sketch.slots[i] = Some(SlotEntry {
                rank: rank_field + 1,
                len,
                id,
            });
            sketch.filled += 1;
        }
        Ok(sketch)
    }

    /// Test helper: plants an entry directly, bypassing hashing.
    #[cfg(test)]
    pub(crate) fn set_slot_for_test(&mut self, slot: usize, rank: u32, id: &[u8]) {
        if self.slots[slot].is_none() {
            self.filled += 1;
        }
        let mut buf = [0u8; MAX_ID_LEN];
        buf[..id.len()].copy_from_slice(id);
        self.slots[slot] = Some(SlotEntry {
            rank,
            len: id.len() as u8,
            id: buf,
        });
    }
}

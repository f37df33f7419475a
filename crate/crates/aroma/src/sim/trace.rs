//! Synthetic packet traces and their on-disk form.
//!
//! File format: a header line `#aroma-trace v1 universe=<bits>` followed by
//! CSV rows `pid,fid_hex`; extra columns are ignored on load. Packet ids
//! must be strictly increasing, which also makes them unique.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;

use crate::flow::{from_hex, hex, FlowId, PacketRecord};
use crate::hash::splitmix64;
use crate::{Error, Result};

/// An ordered packet stream with unique packet identifiers.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    packets: Vec<PacketRecord>,
    universe_bits: u32,
}

impl Trace {
    /// Wraps a packet sequence, verifying that pids strictly increase.
    pub fn from_packets(packets: Vec<PacketRecord>, universe_bits: u32) -> Result<Self> {
        for pair in packets.windows(2) {
            if pair[1].pid <= pair[0].pid {
                return Err(Error::Format(format!(
                    "packet ids must strictly increase: {} then {}",
                    pair[0].pid, pair[1].pid
                )));
            }
        }
        Ok(Self {
            packets,
            universe_bits,
        })
    }

    pub fn packets(&self) -> &[PacketRecord] {
        &self.packets
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn universe_bits(&self) -> u32 {
        self.universe_bits
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "#aroma-trace v1 universe={}", self.universe_bits)?;
        for p in &self.packets {
            writeln!(w, "{},{}", p.pid, hex(p.fid.as_bytes()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut lines = BufReader::new(File::open(path)?).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty trace file".into()))??;
        let universe_bits = parse_header(&header)?;
        let mut packets = Vec::new();
        let mut last_pid: Option<u64> = None;
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let pid_str = fields
                .next()
                .ok_or_else(|| Error::Format(format!("row {}: missing pid", lineno + 2)))?;
            let fid_str = fields
                .next()
                .ok_or_else(|| Error::Format(format!("row {}: missing flow id", lineno + 2)))?;
            let pid: u64 = pid_str
                .parse()
                .map_err(|_| Error::Format(format!("row {}: bad pid {pid_str:?}", lineno + 2)))?;
            if let Some(prev) = last_pid {
                if pid <= prev {
                    return Err(Error::Format(format!(
                        "row {}: pid {pid} not greater than previous {prev}",
                        lineno + 2
                    )));
                }
            }
            last_pid = Some(pid);
            let fid = FlowId::from_bytes(&from_hex(fid_str)?)?;
            packets.push(PacketRecord::new(pid, fid));
        }
        Self::from_packets(packets, universe_bits)
    }
}

fn parse_header(header: &str) -> Result<u32> {
    let rest = header
        .strip_prefix("#aroma-trace v1 universe=")
        .ok_or_else(|| Error::Format(format!("bad trace header {header:?}")))?;
    rest.parse()
        .map_err(|_| Error::Format(format!("bad universe width in header {header:?}")))
}

/// Maps a flow rank (1-based) to a synthetic `src.dst` pair identifier.
/// Odd-multiplier mixing is bijective on u64, so distinct ranks always get
/// distinct identifiers.
fn rank_to_fid(rank: u64, seed: u64) -> FlowId {
    let mixed = rank
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(splitmix64(seed ^ 0x5851_f42d_4c95_7f2d));
    FlowId::from_pair((mixed >> 32) as u32, mixed as u32)
}

/// Generates `n` packets whose flows follow a Zipf law with the given skew
/// over `universe` flows; `skew = 0` is uniform. `pid` is the packet index,
/// so identifiers are unique by construction. Deterministic per seed.
pub fn gen_zipf_trace(n: u64, skew: f64, universe: u64, seed: u64) -> Result<Trace> {
    if n == 0 {
        return Err(Error::InvalidParam("trace length must be >= 1".into()));
    }
    if universe == 0 {
        return Err(Error::InvalidParam("universe must hold >= 1 flow".into()));
    }
    if !skew.is_finite() || skew < 0.0 {
        return Err(Error::InvalidParam(format!(
            "skew {skew} must be finite and >= 0"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut packets = Vec::with_capacity(n as usize);
    if skew == 0.0 {
        let ranks = Uniform::new_inclusive(1u64, universe);
        for pid in 0..n {
            packets.push(PacketRecord::new(pid, rank_to_fid(ranks.sample(&mut rng), seed)));
        }
    } else {
        let zipf = Zipf::new(universe, skew)
            .map_err(|e| Error::InvalidParam(format!("zipf({universe}, {skew}): {e}")))?;
        for pid in 0..n {
            let rank = zipf.sample(&mut rng) as u64;
            packets.push(PacketRecord::new(pid, rank_to_fid(rank, seed)));
        }
    }
    Trace::from_packets(packets, 64)
}

/// The identifier the generator assigns to a given flow rank; exposed so
/// tests can locate specific flows (rank 1 is the heaviest).
pub fn zipf_rank_fid(rank: u64, seed: u64) -> FlowId {
    rank_to_fid(rank, seed)
}

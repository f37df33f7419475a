//! Canonical flow and packet identifiers.
//!
//! Flow identifiers serialize to fixed-width big-endian byte strings before
//! hashing so results are bit-exact across components: `src.dst` for the
//! address-pair form (8 bytes), `src.dst.sport.dport.proto` for the 5-tuple
//! form (13 bytes). Identifiers are capped at 16 bytes.

use std::fmt;

use crate::hash::splitmix64;
use crate::{Error, Result};

/// Maximum canonical identifier width in bytes.
pub const MAX_ID_LEN: usize = 16;

/// A canonical flow identifier: up to 16 bytes of big-endian fields.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowId {
    len: u8,
    bytes: [u8; MAX_ID_LEN],
}

impl FlowId {
    /// Source/destination address pair (8 bytes).
    pub fn from_pair(src: u32, dst: u32) -> Self {
        let mut bytes = [0u8; MAX_ID_LEN];
        bytes[..4].copy_from_slice(&src.to_be_bytes());
        bytes[4..8].copy_from_slice(&dst.to_be_bytes());
        Self { len: 8, bytes }
    }

    /// Full 5-tuple (13 bytes).
    pub fn from_five_tuple(src: u32, dst: u32, sport: u16, dport: u16, proto: u8) -> Self {
        let mut bytes = [0u8; MAX_ID_LEN];
        bytes[..4].copy_from_slice(&src.to_be_bytes());
        bytes[4..8].copy_from_slice(&dst.to_be_bytes());
        bytes[8..10].copy_from_slice(&sport.to_be_bytes());
        bytes[10..12].copy_from_slice(&dport.to_be_bytes());
        bytes[12] = proto;
        Self { len: 13, bytes }
    }

    /// Arbitrary canonical bytes, at most 16.
    pub fn from_bytes(raw: &[u8]) -> Result<Self> {
        if raw.is_empty() || raw.len() > MAX_ID_LEN {
            return Err(Error::InvalidParam(format!(
                "flow id must be 1..={MAX_ID_LEN} bytes, got {}",
                raw.len()
            )));
        }
        let mut bytes = [0u8; MAX_ID_LEN];
        bytes[..raw.len()].copy_from_slice(raw);
        Ok(Self {
            len: raw.len() as u8,
            bytes,
        })
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes[..self.len as usize]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// First four bytes read big-endian: the source address for the pair
    /// and 5-tuple forms.
    pub fn src_ip(&self) -> u32 {
        let mut b = [0u8; 4];
        b.copy_from_slice(&self.bytes[..4]);
        u32::from_be_bytes(b)
    }

    /// Bytes 4..8 read big-endian: the destination address for the pair and
    /// 5-tuple forms.
    pub fn dst_ip(&self) -> u32 {
        let mut b = [0u8; 4];
        b.copy_from_slice(&self.bytes[4..8]);
        u32::from_be_bytes(b)
    }

    /// The fixed 8-byte flow field carried inside packet-mode samples.
    ///
    /// Identifiers of at most 8 bytes are stored raw (zero-padded), longer
    /// ones are folded through a seed-less 64-bit hash; either way the key
    /// is a pure function of the identifier.
    pub fn flow_key(&self) -> FlowKey {
        let mut b = [0u8; 8];
        if self.len as usize <= 8 {
            b[..self.len as usize].copy_from_slice(self.as_bytes());
        } else {
            let mut h = 0xcbf2_9ce4_8422_2325u64;
            for &x in self.as_bytes() {
                h ^= u64::from(x);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
            b = splitmix64(h).to_be_bytes();
        }
        FlowKey(b)
    }
}

impl fmt::Debug for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FlowId({})", hex(self.as_bytes()))
    }
}

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex(self.as_bytes()))
    }
}

/// The 8-byte flow field embedded in packet-mode sample slots; also the key
/// estimators and ground truth are indexed by.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowKey(pub [u8; 8]);

impl FlowKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Source address when the key is a raw `src.dst` pair.
    pub fn src_ip(&self) -> u32 {
        u32::from_be_bytes([self.0[0], self.0[1], self.0[2], self.0[3]])
    }

    /// Destination address when the key is a raw `src.dst` pair.
    pub fn dst_ip(&self) -> u32 {
        u32::from_be_bytes([self.0[4], self.0[5], self.0[6], self.0[7]])
    }

    pub fn to_hex(&self) -> String {
        hex(&self.0)
    }
}

impl fmt::Debug for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FlowKey({})", self.to_hex())
    }
}

impl fmt::Display for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// One stream element: a packet with a globally unique identifier `pid`
/// belonging to flow `fid`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PacketRecord {
    pub pid: u64,
    pub fid: FlowId,
}

impl PacketRecord {
    pub fn new(pid: u64, fid: FlowId) -> Self {
        Self { pid, fid }
    }
}

/// Packet-mode slots store `pid.flow_key` (16 bytes) so the controller can
/// attribute sampled packets to flows.
pub(crate) fn packet_sample_id(p: &PacketRecord) -> [u8; 16] {
    let mut b = [0u8; 16];
    b[..8].copy_from_slice(&p.pid.to_be_bytes());
    b[8..].copy_from_slice(p.fid.flow_key().as_bytes());
    b
}

/// Splits a stored packet-mode id back into `(pid, flow key)`.
pub fn split_packet_sample_id(id: &[u8]) -> Result<(u64, FlowKey)> {
    if id.len() != 16 {
        return Err(Error::Format(format!(
            "packet sample id must be 16 bytes, got {}",
            id.len()
        )));
    }
    let pid = u64::from_be_bytes(id[..8].try_into().expect("checked length"));
    let mut k = [0u8; 8];
    k.copy_from_slice(&id[8..]);
    Ok((pid, FlowKey(k)))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

pub(crate) fn from_hex(s: &str) -> Result<Vec<u8>> {
    if !s.len().is_multiple_of(2) {
        return Err(Error::Format(format!("odd-length hex string {s:?}")));
    }
    (0..s.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&s[i..i + 2], 16)
                .map_err(|_| Error::Format(format!("bad hex string {s:?}")))
        })
        .collect()
}

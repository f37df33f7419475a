//! Routing models: which switches observe each packet.
//!
//! Assignment is a pure function of `(model, seed, packet)`, so any consumer
//! — materialized substreams, the streaming experiment runner, or a parallel
//! worker — sees the same routing. Every packet reaches at least one switch.

use serde::{Deserialize, Serialize};

use crate::flow::PacketRecord;
use crate::hash::splitmix64;
use crate::sim::hopcount::{hop_count_distribution, DEFAULT_MAX_HOPS};
use crate::sim::trace::Trace;
use crate::{Error, Result};

/// How packets are spread over the `K` measurement switches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RoutingModel {
    /// Everything goes through one switch.
    SingleSwitch,
    /// Each switch independently observes the packet with probability `p`;
    /// a uniformly chosen switch steps in when none did.
    UniformSubset { k: u32, p: f64 },
    /// The packet visits `h` switches with `h` drawn from the Internet-like
    /// hop-count distribution for an `n`-node network, clamped to `[1, k]`.
    HopCount { k: u32, n: f64 },
    /// Every flow gets a fixed set of `path_len` switches; all its packets
    /// take that path.
    FixedPathPerFlow { k: u32, path_len: u32 },
}

impl RoutingModel {
    pub fn switch_count(&self) -> u32 {
        match self {
            RoutingModel::SingleSwitch => 1,
            RoutingModel::UniformSubset { k, .. }
            | RoutingModel::HopCount { k, .. }
            | RoutingModel::FixedPathPerFlow { k, .. } => *k,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            RoutingModel::SingleSwitch => Ok(()),
            RoutingModel::UniformSubset { k, p } => {
                if *k < 1 {
                    return Err(Error::InvalidParam("switch count must be >= 1".into()));
                }
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidParam(format!("subset p {p} outside [0, 1]")));
                }
                Ok(())
            }
            RoutingModel::HopCount { k, n } => {
                if *k < 1 {
                    return Err(Error::InvalidParam("switch count must be >= 1".into()));
                }
                if !n.is_finite() || *n < 2.0 {
                    return Err(Error::InvalidParam(format!(
                        "hop-count network size {n} must be >= 2"
                    )));
                }
                Ok(())
            }
            RoutingModel::FixedPathPerFlow { k, path_len } => {
                if *k < 1 {
                    return Err(Error::InvalidParam("switch count must be >= 1".into()));
                }
                if *path_len < 1 || path_len > k {
                    return Err(Error::InvalidParam(format!(
                        "path length {path_len} outside 1..={k}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Cheap deterministic generator for routing decisions (SplitMix64 chain).
struct DetRng {
    state: u64,
}

impl DetRng {
    fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    fn next_u64(&mut self) -> u64 {
        self.state = splitmix64(self.state);
        self.state
    }

    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Per-packet switch assignment for one routing model.
pub struct Router {
    model: RoutingModel,
    seed: u64,
    hop_cdf: Vec<f64>,
}

impl Router {
    pub fn new(model: RoutingModel, seed: u64) -> Result<Self> {
        model.validate()?;
        let hop_cdf = match &model {
            RoutingModel::HopCount { n, .. } => {
                let probs = hop_count_distribution(*n, DEFAULT_MAX_HOPS);
                let mut cdf = Vec::with_capacity(probs.len());
                let mut acc = 0.0;
                for p in probs {
                    acc += p;
                    cdf.push(acc);
                }
                cdf
            }
            _ => Vec::new(),
        };
        Ok(Self {
            model,
            seed,
            hop_cdf,
        })
    }

    pub fn model(&self) -> &RoutingModel {
        &self.model
    }

    pub fn switch_count(&self) -> u32 {
        self.model.switch_count()
    }

    /// The non-empty switch subset observing `p`, ascending, written into
    /// `out`.
    pub fn switches_for(&self, p: &PacketRecord, out: &mut Vec<u32>) {
        out.clear();
        match &self.model {
            RoutingModel::SingleSwitch => out.push(0),
            RoutingModel::UniformSubset { k, p: prob } => {
                let mut rng = self.packet_rng(p.pid);
                for s in 0..*k {
                    if rng.next_f64() < *prob {
                        out.push(s);
                    }
                }
                if out.is_empty() {
                    out.push((rng.next_u64() % u64::from(*k)) as u32);
                }
            }
            RoutingModel::HopCount { k, .. } => {
                let mut rng = self.packet_rng(p.pid);
                let u = rng.next_f64();
                let hops = self
                    .hop_cdf
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(self.hop_cdf.len() - 1) as u32;
                let visits = hops.clamp(1, *k);
                sample_distinct(&mut rng, *k, visits, out);
            }
            RoutingModel::FixedPathPerFlow { k, path_len } => {
                // Keyed on the flow so every packet of a flow takes one path.
                let mut h = 0xcbf2_9ce4_8422_2325u64 ^ self.seed;
                for &b in p.fid.as_bytes() {
                    h ^= u64::from(b);
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
                let mut rng = DetRng::new(splitmix64(h));
                sample_distinct(&mut rng, *k, *path_len, out);
            }
        }
        debug_assert!(!out.is_empty(), "coverage: every packet visits a switch");
    }

    fn packet_rng(&self, pid: u64) -> DetRng {
        DetRng::new(splitmix64(self.seed ^ pid.wrapping_mul(0xa24b_aed4_963e_e407)))
    }
}

/// `count` distinct switches out of `0..k`, ascending (partial
/// Fisher-Yates).
fn sample_distinct(rng: &mut DetRng, k: u32, count: u32, out: &mut Vec<u32>) {
    debug_assert!(count >= 1 && count <= k);
    let mut pool: Vec<u32> = (0..k).collect();
    for i in 0..count as usize {
        let j = i + (rng.next_u64() % (pool.len() - i) as u64) as usize;
        pool.swap(i, j);
    }
    out.extend_from_slice(&pool[..count as usize]);
    out.sort_unstable();
}

/// Materializes the per-switch substreams. The union of the substreams is
/// the whole trace.
pub fn route(trace: &Trace, model: RoutingModel, seed: u64) -> Result<Vec<Vec<PacketRecord>>> {
    let router = Router::new(model, seed)?;
    let mut streams: Vec<Vec<PacketRecord>> = vec![Vec::new(); router.switch_count() as usize];
    let mut buf = Vec::new();
    for p in trace.packets() {
        router.switches_for(p, &mut buf);
        for &s in &buf {
            streams[s as usize].push(*p);
        }
    }
    Ok(streams)
}

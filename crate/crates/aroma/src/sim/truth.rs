//! Exact ground truth by direct enumeration.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::controller::mask_prefix;
use crate::flow::FlowKey;
use crate::sim::trace::Trace;
use crate::{Error, Result};

/// Exact per-task answers for one trace. Flows are keyed the same way the
/// estimators key them; source/destination tasks read the key as a
/// `src.dst` address pair.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub stream_len: u64,
    pub distinct_flows: u64,
    /// Exact flow sizes.
    pub flow_sizes: BTreeMap<FlowKey, u64>,
    /// Flows with at least a `theta` fraction of the stream.
    pub heavy_hitters: BTreeSet<FlowKey>,
    /// Per prefix length: source prefixes with more than a `theta` fraction.
    pub hhh: BTreeMap<u8, BTreeSet<u32>>,
    /// Sources contacting at least `psi` distinct destinations.
    pub superspreaders: BTreeSet<u32>,
    /// Exact size histogram `F_i`.
    pub size_hist: BTreeMap<u64, u64>,
    pub theta: f64,
    pub psi_ss: f64,
    pub prefix_lengths: Vec<u8>,
}

impl GroundTruth {
    /// All requested prefixes as `(length, masked value)` pairs, for F1
    /// scoring against the estimator output.
    pub fn hhh_pairs(&self) -> BTreeSet<(u8, u32)> {
        self.hhh
            .iter()
            .flat_map(|(&len, set)| set.iter().map(move |&v| (len, v)))
            .collect()
    }
}

/// Enumerates the trace once and answers every task exactly.
pub fn compute_ground_truth(
    trace: &Trace,
    theta: f64,
    psi_ss: f64,
    prefix_lengths: &[u8],
) -> Result<GroundTruth> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParam(format!("theta {theta} outside (0, 1)")));
    }
    if psi_ss <= 0.0 {
        return Err(Error::InvalidParam(format!("psi {psi_ss} must be positive")));
    }
    for &len in prefix_lengths {
        if len == 0 || len > 32 {
            return Err(Error::InvalidParam(format!(
                "prefix length {len} outside 1..=32"
            )));
        }
    }

    let mut flow_sizes: BTreeMap<FlowKey, u64> = BTreeMap::new();
    for p in trace.packets() {
        *flow_sizes.entry(p.fid.flow_key()).or_insert(0) += 1;
    }
    let stream_len = trace.len() as u64;
    let hh_threshold = theta * stream_len as f64;

    let mut heavy_hitters = BTreeSet::new();
    let mut size_hist: BTreeMap<u64, u64> = BTreeMap::new();
    let mut prefix_traffic: BTreeMap<(u8, u32), u64> = BTreeMap::new();
    let mut dests: BTreeMap<u32, HashSet<u32>> = BTreeMap::new();
    for (key, &size) in &flow_sizes {
        if size as f64 >= hh_threshold {
            heavy_hitters.insert(*key);
        }
        *size_hist.entry(size).or_insert(0) += 1;
        let src = key.src_ip();
        for &len in prefix_lengths {
            *prefix_traffic
                .entry((len, mask_prefix(src, len)))
                .or_insert(0) += size;
        }
        dests.entry(src).or_default().insert(key.dst_ip());
    }

    let mut hhh: BTreeMap<u8, BTreeSet<u32>> = BTreeMap::new();
    for &len in prefix_lengths {
        hhh.entry(len).or_default();
    }
    for ((len, value), traffic) in prefix_traffic {
        if traffic as f64 > hh_threshold {
            hhh.get_mut(&len).expect("pre-seeded").insert(value);
        }
    }

    let superspreaders = dests
        .into_iter()
        .filter(|(_, d)| d.len() as f64 >= psi_ss)
        .map(|(s, _)| s)
        .collect();

    let truth = GroundTruth {
        stream_len,
        distinct_flows: flow_sizes.len() as u64,
        flow_sizes,
        heavy_hitters,
        hhh,
        superspreaders,
        size_hist,
        theta,
        psi_ss,
        prefix_lengths: prefix_lengths.to_vec(),
    };
    debug_assert_eq!(truth.flow_sizes.values().sum::<u64>(), truth.stream_len);
    debug_assert_eq!(
        truth
            .size_hist
            .iter()
            .map(|(i, f)| i * f)
            .sum::<u64>(),
        truth.stream_len
    );
    Ok(truth)
}

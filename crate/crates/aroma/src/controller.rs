//! Controller-side logic: merge switch sketches into one global sample and
//! answer measurement queries over it.
//!
//! Because merging is exact, every estimator here returns bit-identical
//! results whether the traffic was observed by one switch or split, with
//! duplication, across many.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::flow::{split_packet_sample_id, FlowId, FlowKey};
use crate::sample::{SampleMode, SampleSketch};
use crate::{Error, Result};

/// The merged network-wide sample plus its derived quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalSample {
    merged: SampleSketch,
    m_tilde: u32,
    v_hat: f64,
}

impl GlobalSample {
    /// Merges every switch sketch (left fold, in order) and derives the
    /// achieved sample size and cardinality estimate.
    pub fn merge_all(sketches: &[SampleSketch]) -> Result<Self> {
        let mut iter = sketches.iter();
        let first = iter.next().ok_or(Error::EmptySample)?;
        let mut merged = first.clone();
        for sk in iter {
            merged.merge_from(sk)?;
        }
        Ok(Self::from_sketch(merged))
    }

    /// Wraps an already-merged (or single-switch) sketch.
    pub fn from_sketch(merged: SampleSketch) -> Self {
        let m_tilde = merged.filled_count();
        let v_hat = if m_tilde == 0 {
            // The literal harmonic-mean formula would report the slot count
            // for an untouched structure, which is spurious.
            0.0
        } else {
            let slots = merged.slot_count() as f64;
            slots * slots / merged.rank_sum()
        };
        Self {
            merged,
            m_tilde,
            v_hat,
        }
    }

    pub fn merged(&self) -> &SampleSketch {
        &self.merged
    }

    pub fn mode(&self) -> SampleMode {
        self.merged.mode()
    }

    /// Achieved sample size (number of non-empty slots).
    pub fn sample_size(&self) -> u32 {
        self.m_tilde
    }

    /// Distinct-count estimate: the slot count squared over the sum of slot
    /// ranks (empty slots contributing 1.0), or 0 for an empty sample.
    ///
    /// The estimate is only calibrated once the slots are saturated; below
    /// saturation the empty-slot terms dominate and it tends toward the slot
    /// count.
    pub fn cardinality(&self) -> f64 {
        self.v_hat
    }

    /// Estimated sampling probability `sample_size / cardinality`, clamped
    /// to 1. Errors on an empty sample, where it is undefined.
    pub fn sampling_probability(&self) -> Result<f64> {
        if self.v_hat <= 0.0 {
            return Err(Error::EmptySample);
        }
        Ok(clamp_probability(f64::from(self.m_tilde), self.v_hat))
    }

    /// Per-flow occurrence counts among the sampled packets (packet mode).
    pub fn flow_counts(&self) -> Result<BTreeMap<FlowKey, u32>> {
        self.require_mode(SampleMode::Packet, "flow counts")?;
        let mut counts = BTreeMap::new();
        for e in self.merged.sample_ids() {
            let (_, key) = split_packet_sample_id(e.id)?;
            *counts.entry(key).or_insert(0u32) += 1;
        }
        Ok(counts)
    }

    /// Estimated size of flow `key`: its sample count divided by the
    /// sampling probability; 0 when the flow was not sampled.
    pub fn frequency(&self, key: FlowKey) -> Result<f64> {
        self.require_mode(SampleMode::Packet, "frequency estimation")?;
        let t_x = self.flow_counts()?.get(&key).copied().unwrap_or(0);
        if t_x == 0 {
            return Ok(0.0);
        }
        Ok(f64::from(t_x) / self.sampling_probability()?)
    }

    /// Flows occupying at least a `theta` fraction of the sample.
    pub fn heavy_hitters(&self, theta: f64) -> Result<BTreeSet<FlowKey>> {
        self.require_mode(SampleMode::Packet, "heavy hitters")?;
        check_fraction(theta, "theta")?;
        let threshold = theta * f64::from(self.m_tilde);
        Ok(self
            .flow_counts()?
            .into_iter()
            .filter(|(_, t)| f64::from(*t) >= threshold)
            .map(|(k, _)| k)
            .collect())
    }

    /// Source prefixes (per requested length) appearing in more than a
    /// `theta` fraction of the sampled packets.
    ///
    /// Prefixes are taken over the leading 32 bits of the flow key, which is
    /// the source address for raw `src.dst` flow identifiers.
    pub fn hierarchical_heavy_hitters(
        &self,
        theta: f64,
        prefix_lengths: &[u8],
    ) -> Result<BTreeSet<(u8, u32)>> {
        self.require_mode(SampleMode::Packet, "hierarchical heavy hitters")?;
        check_fraction(theta, "theta")?;
        if prefix_lengths.is_empty() {
            return Err(Error::InvalidParam("no prefix lengths given".into()));
        }
        for &len in prefix_lengths {
            if len == 0 || len > 32 {
                return Err(Error::InvalidParam(format!(
                    "prefix length {len} outside 1..=32"
                )));
            }
        }
        let mut counts: BTreeMap<(u8, u32), u32> = BTreeMap::new();
        for e in self.merged.sample_ids() {
            let (_, key) = split_packet_sample_id(e.id)?;
            let src = key.src_ip();
            for &len in prefix_lengths {
                *counts.entry((len, mask_prefix(src, len))).or_insert(0) += 1;
            }
        }
        let threshold = theta * f64::from(self.m_tilde);
        Ok(counts
            .into_iter()
            .filter(|(_, c)| f64::from(*c) > threshold)
            .map(|(p, _)| p)
            .collect())
    }

    /// Source addresses whose sampled-flow count exceeds `psi * p_hat`
    /// (flow mode): in expectation these contact more than `psi` distinct
    /// destinations.
    pub fn superspreaders(&self, psi: f64) -> Result<BTreeSet<u32>> {
        self.require_mode(SampleMode::Flow, "superspreaders")?;
        if psi <= 0.0 {
            return Err(Error::InvalidParam(format!("psi {psi} must be positive")));
        }
        let p_hat = self.sampling_probability()?;
        let mut per_source: BTreeMap<u32, u32> = BTreeMap::new();
        for e in self.merged.sample_ids() {
            let fid = FlowId::from_bytes(e.id)?;
            *per_source.entry(fid.src_ip()).or_insert(0) += 1;
        }
        let threshold = psi * p_hat;
        Ok(per_source
            .into_iter()
            .filter(|(_, c)| f64::from(*c) > threshold)
            .map(|(s, _)| s)
            .collect())
    }

    fn require_mode(&self, want: SampleMode, what: &str) -> Result<()> {
        if self.mode() != want {
            return Err(Error::WrongMode(format!(
                "{what} needs a {want:?}-mode sample, got {:?}",
                self.mode()
            )));
        }
        Ok(())
    }
}

fn clamp_probability(m_tilde: f64, v_hat: f64) -> f64 {
    (m_tilde / v_hat).min(1.0)
}

fn check_fraction(x: f64, name: &str) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParam(format!("{name} {x} outside (0, 1)")));
    }
    Ok(())
}

pub(crate) fn mask_prefix(addr: u32, len: u8) -> u32 {
    addr & (u32::MAX << (32 - u32::from(len)))
}

/// Estimated flow-size histogram from the packet and flow samples.
///
/// This estimator is a heuristic reconstruction: every flow seen in the
/// packet sample gets size `round(T_x / p_hat)` (at least 1), and the
/// histogram is rescaled so its total flow count matches the flow sample's
/// cardinality estimate. Sizes are quantized to multiples of roughly
/// `1 / p_hat`, so its resolution degrades as the sampling probability
/// drops.
pub fn flow_size_distribution(
    packets: &GlobalSample,
    flows: &GlobalSample,
) -> Result<BTreeMap<u64, f64>> {
    if packets.mode() != SampleMode::Packet || flows.mode() != SampleMode::Flow {
        return Err(Error::WrongMode(
            "flow-size distribution needs one packet-mode and one flow-mode sample".into(),
        ));
    }
    if packets.sample_size() == 0 || flows.sample_size() == 0 {
        return Err(Error::EmptySample);
    }
    let p_hat = packets.sampling_probability()?;
    let mut raw: BTreeMap<u64, u64> = BTreeMap::new();
    let mut sampled_flows = 0u64;
    for (_, t_x) in packets.flow_counts()? {
        let size = (f64::from(t_x) / p_hat).round().max(1.0) as u64;
        *raw.entry(size).or_insert(0) += 1;
        sampled_flows += 1;
    }
    let scale = flows.cardinality() / sampled_flows as f64;
    Ok(raw
        .into_iter()
        .map(|(size, count)| (size, count as f64 * scale))
        .collect())
}

/// Sample size required for an additive `epsilon`-error guarantee with
/// failure probability `delta`: `ceil(3 eps^-2 log2(4/delta))`.
pub fn required_sample_size(epsilon: f64, delta: f64) -> Result<u64> {
    check_fraction(epsilon, "epsilon")?;
    check_fraction(delta, "delta")?;
    Ok((3.0 / (epsilon * epsilon) * (4.0 / delta).log2()).ceil() as u64)
}

/// Packet count after which a sampler with `alpha * M` slots has filled at
/// least `M` of them with probability `1 - delta/2`.
///
/// `alpha = 1` is the full coupon-collector bound `ceil(M ln(2M/delta))`;
/// `alpha > 1` is `ceil(beta M)` with
/// `beta = 1 + 1/ln(alpha) + ln(2/delta)/(M ln(alpha))`.
pub fn convergence_bound(m: u64, alpha: f64, delta: f64) -> Result<u64> {
    if m == 0 {
        return Err(Error::InvalidParam("sample size M must be >= 1".into()));
    }
    check_fraction(delta, "delta")?;
    if alpha < 1.0 {
        return Err(Error::InvalidParam(format!("alpha {alpha} must be >= 1")));
    }
    let m_f = m as f64;
    let packets = if alpha == 1.0 {
        m_f * (2.0 * m_f / delta).ln()
    } else {
        convergence_beta(m, alpha, delta) * m_f
    };
    Ok(packets.ceil() as u64)
}

/// The `beta` factor of the `alpha > 1` fill bound.
pub fn convergence_beta(m: u64, alpha: f64, delta: f64) -> f64 {
    let ln_a = alpha.ln();
    1.0 + 1.0 / ln_a + (2.0 / delta).ln() / (m as f64 * ln_a)
}

/// Resolved accuracy parameters: target `(epsilon, delta)`, the slot
/// over-provisioning factor `alpha`, the required sample size, and the
/// matching power-of-two slot width.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AnalysisParams {
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
    /// Required sample size M.
    pub sample_size: u64,
    /// Smallest m with `2^m >= alpha * M`.
    pub slot_bits: u32,
}

impl AnalysisParams {
    pub fn derive(epsilon: f64, delta: f64, alpha: f64) -> Result<Self> {
        if alpha < 1.0 {
            return Err(Error::InvalidParam(format!("alpha {alpha} must be >= 1")));
        }
        let sample_size = required_sample_size(epsilon, delta)?;
        let want = alpha * sample_size as f64;
        let mut slot_bits = 1u32;
        while (1u64 << slot_bits) < want.ceil() as u64 {
            slot_bits += 1;
            if slot_bits > crate::hash::MAX_SLOT_BITS {
                return Err(Error::InvalidParam(format!(
                    "alpha * M = {want} exceeds the largest supported slot count"
                )));
            }
        }
        Ok(Self {
            epsilon,
            delta,
            alpha,
            sample_size,
            slot_bits,
        })
    }

    /// Convergence bound at these parameters.
    pub fn convergence_packets(&self) -> u64 {
        convergence_bound(self.sample_size, self.alpha, self.delta)
            .expect("parameters validated at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::PacketRecord;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const RANK_HALF: u32 = 1 << 31; // 0.5
    const RANK_EIGHTH: u32 = 1 << 29; // 0.125

    fn packet(pid: u64, flow: u32) -> PacketRecord {
        PacketRecord::new(pid, FlowId::from_pair(flow, flow ^ 0xabcd))
    }

    #[test]
    fn merge_all_single_and_identical() {
        let mut sk = SampleSketch::new(SampleMode::Packet, 4, 3).unwrap();
        for i in 0..50 {
            sk.add(&packet(i, (i % 7) as u32));
        }
        let one = GlobalSample::merge_all(std::slice::from_ref(&sk)).unwrap();
        assert_eq!(one.merged(), &sk);
        let many = GlobalSample::merge_all(&[sk.clone(), sk.clone(), sk.clone()]).unwrap();
        assert_eq!(many, one);
    }

    #[test]
    fn merge_all_rejects_empty_and_incompatible() {
        assert!(matches!(
            GlobalSample::merge_all(&[]),
            Err(Error::EmptySample)
        ));
        let a = SampleSketch::new(SampleMode::Packet, 4, 0).unwrap();
        let b = SampleSketch::new(SampleMode::Packet, 4, 1).unwrap();
        assert!(GlobalSample::merge_all(&[a, b]).is_err());
    }

    #[test]
    fn cardinality_harmonic_mean_example() {
        // 4 slots, ranks {0.5, 1.0, 1.0, 1.0} -> 16 / 3.5.
        let mut sk = SampleSketch::new(SampleMode::Flow, 2, 0).unwrap();
        sk.set_slot_for_test(0, RANK_HALF, b"A");
        let gs = GlobalSample::from_sketch(sk);
        assert!((gs.cardinality() - 16.0 / 3.5).abs() < 1e-12);
    }

    #[test]
    fn cardinality_zero_on_empty() {
        let sk = SampleSketch::new(SampleMode::Flow, 3, 0).unwrap();
        let gs = GlobalSample::from_sketch(sk);
        assert_eq!(gs.cardinality(), 0.0);
        assert!(matches!(gs.sampling_probability(), Err(Error::EmptySample)));
    }

    #[test]
    fn sampling_probability_formula_and_clamp() {
        assert_eq!(clamp_probability(100.0, 1000.0), 0.1);
        // Tiny samples can push the ratio above 1; it must clamp.
        assert_eq!(clamp_probability(4.0, 3.2), 1.0);
    }

    #[test]
    fn frequency_formula_and_absent_flow() {
        let mut sk = SampleSketch::new(SampleMode::Packet, 8, 5).unwrap();
        for i in 0..2000u64 {
            sk.add(&packet(i, (i % 3) as u32));
        }
        let gs = GlobalSample::from_sketch(sk);
        let counts = gs.flow_counts().unwrap();
        let p_hat = gs.sampling_probability().unwrap();
        for (key, t_x) in &counts {
            let f = gs.frequency(*key).unwrap();
            assert!((f - f64::from(*t_x) / p_hat).abs() < 1e-9);
        }
        let absent = FlowId::from_pair(9999, 1).flow_key();
        assert_eq!(gs.frequency(absent).unwrap(), 0.0);
    }

    #[test]
    fn estimators_check_sample_mode() {
        let flow_gs =
            GlobalSample::from_sketch(SampleSketch::new(SampleMode::Flow, 4, 0).unwrap());
        let pkt_gs =
            GlobalSample::from_sketch(SampleSketch::new(SampleMode::Packet, 4, 0).unwrap());
        let key = FlowId::from_pair(1, 2).flow_key();
        assert!(matches!(flow_gs.frequency(key), Err(Error::WrongMode(_))));
        assert!(matches!(
            flow_gs.heavy_hitters(0.1),
            Err(Error::WrongMode(_))
        ));
        assert!(matches!(
            flow_gs.hierarchical_heavy_hitters(0.1, &[8]),
            Err(Error::WrongMode(_))
        ));
        assert!(matches!(
            pkt_gs.superspreaders(10.0),
            Err(Error::WrongMode(_))
        ));
    }

    #[test]
    fn heavy_hitters_threshold_and_monotonicity() {
        let mut sk = SampleSketch::new(SampleMode::Packet, 10, 11).unwrap();
        // Skewed synthetic counts over a few flows.
        let mut pid = 0u64;
        for (flow, n) in [(0u32, 600u64), (1, 200), (2, 60), (3, 10), (4, 2)] {
            for _ in 0..n {
                sk.add(&packet(pid, flow));
                pid += 1;
            }
        }
        let gs = GlobalSample::from_sketch(sk);
        assert!(matches!(gs.heavy_hitters(0.0), Err(Error::InvalidParam(_))));
        assert!(matches!(gs.heavy_hitters(1.0), Err(Error::InvalidParam(_))));
        let counts = gs.flow_counts().unwrap();
        let m_tilde = f64::from(gs.sample_size());
        for theta in [0.01, 0.1, 0.3] {
            let hh = gs.heavy_hitters(theta).unwrap();
            for (key, t) in &counts {
                assert_eq!(hh.contains(key), f64::from(*t) >= theta * m_tilde);
            }
        }
        let loose = gs.heavy_hitters(0.01).unwrap();
        let tight = gs.heavy_hitters(0.2).unwrap();
        assert!(tight.is_subset(&loose));
    }

    #[test]
    fn heavy_hitters_empty_sample() {
        let gs = GlobalSample::from_sketch(SampleSketch::new(SampleMode::Packet, 4, 0).unwrap());
        assert!(gs.heavy_hitters(0.01).unwrap().is_empty());
    }

    #[test]
    fn hhh_single_flow_reports_all_its_prefixes() {
        let mut sk = SampleSketch::new(SampleMode::Packet, 6, 1).unwrap();
        let fid = FlowId::from_pair(0x0a141e28, 7);
        for i in 0..500u64 {
            sk.add(&PacketRecord::new(i, fid));
        }
        let gs = GlobalSample::from_sketch(sk);
        let lengths = [8u8, 16, 24, 32];
        let out = gs.hierarchical_heavy_hitters(0.5, &lengths).unwrap();
        for &len in &lengths {
            assert!(out.contains(&(len, mask_prefix(0x0a141e28, len))));
        }
        assert_eq!(out.len(), lengths.len());
        // Empty sample -> empty set.
        let empty =
            GlobalSample::from_sketch(SampleSketch::new(SampleMode::Packet, 6, 1).unwrap());
        assert!(empty
            .hierarchical_heavy_hitters(0.5, &lengths)
            .unwrap()
            .is_empty());
        assert!(gs.hierarchical_heavy_hitters(0.5, &[0]).is_err());
        assert!(gs.hierarchical_heavy_hitters(0.5, &[33]).is_err());
        assert!(gs.hierarchical_heavy_hitters(0.5, &[]).is_err());
    }

    #[test]
    fn superspreader_threshold_is_strict() {
        // One source with many distinct destinations, another with few.
        let mut sk = SampleSketch::new(SampleMode::Flow, 10, 2).unwrap();
        let mut pid = 0u64;
        for dst in 0..3000u32 {
            sk.add(&PacketRecord::new(pid, FlowId::from_pair(1, dst)));
            pid += 1;
        }
        for dst in 0..20u32 {
            sk.add(&PacketRecord::new(pid, FlowId::from_pair(2, dst)));
            pid += 1;
        }
        let gs = GlobalSample::from_sketch(sk);
        let p_hat = gs.sampling_probability().unwrap();
        let out = gs.superspreaders(500.0).unwrap();
        assert!(out.contains(&1));
        assert!(!out.contains(&2));
        assert!(gs.superspreaders(0.0).is_err());
        // Per-source sampled counts obey the strict > psi * p_hat rule.
        let mut per_source: BTreeMap<u32, u32> = BTreeMap::new();
        for e in gs.merged().sample_ids() {
            let fid = FlowId::from_bytes(e.id).unwrap();
            *per_source.entry(fid.src_ip()).or_insert(0) += 1;
        }
        for psi in [10.0, 100.0, 1000.0] {
            let got = gs.superspreaders(psi).unwrap();
            for (src, c) in &per_source {
                assert_eq!(got.contains(src), f64::from(*c) > psi * p_hat);
            }
        }
    }

    #[test]
    fn fsd_single_flow_single_bin() {
        // Packet sample where every sampled packet belongs to one flow:
        // the histogram has one bin at round(M_tilde / p_hat) = round(V_hat),
        // holding the flow-sample cardinality estimate.
        let mut pkt = SampleSketch::new(SampleMode::Packet, 2, 0).unwrap();
        let fid = FlowId::from_pair(5, 6);
        let stored: Vec<u8> = {
            let p = PacketRecord::new(42, fid);
            crate::flow::packet_sample_id(&p).to_vec()
        };
        pkt.set_slot_for_test(0, RANK_EIGHTH, &stored);
        let pkt_gs = GlobalSample::from_sketch(pkt);
        // V = 16 / 3.125 = 5.12 exactly, p = 1 / 5.12, so T/p = 5.12 -> 5.
        assert!((pkt_gs.cardinality() - 5.12).abs() < 1e-12);

        let mut flw = SampleSketch::new(SampleMode::Flow, 2, 0).unwrap();
        flw.set_slot_for_test(1, RANK_HALF, fid.as_bytes());
        let flw_gs = GlobalSample::from_sketch(flw);

        let hist = flow_size_distribution(&pkt_gs, &flw_gs).unwrap();
        assert_eq!(hist.len(), 1);
        let (&size, &count) = hist.iter().next().unwrap();
        assert_eq!(size, 5);
        assert!((count - flw_gs.cardinality()).abs() < 1e-12);
    }

    #[test]
    fn fsd_rejects_empty_and_mode_mix() {
        let pkt = GlobalSample::from_sketch(SampleSketch::new(SampleMode::Packet, 3, 0).unwrap());
        let flw = GlobalSample::from_sketch(SampleSketch::new(SampleMode::Flow, 3, 0).unwrap());
        assert!(matches!(
            flow_size_distribution(&pkt, &flw),
            Err(Error::EmptySample)
        ));
        assert!(matches!(
            flow_size_distribution(&flw, &pkt),
            Err(Error::WrongMode(_))
        ));
    }

    #[test]
    fn required_sample_size_values() {
        assert_eq!(required_sample_size(0.01, 0.01).unwrap(), 259_316);
        assert_eq!(required_sample_size(0.05, 0.05).unwrap(), 7_587);
        assert!(required_sample_size(1.0, 0.1).is_err());
        assert!(required_sample_size(0.1, 1.0).is_err());
        assert!(required_sample_size(0.0, 0.1).is_err());
        assert!(required_sample_size(0.1, 0.0).is_err());
    }

    #[test]
    fn convergence_bound_values() {
        // beta = 1 + 1/ln2 + ln4/ln2 = 4.4427 -> 5 packets at M = 1.
        assert_eq!(convergence_bound(1, 2.0, 0.5).unwrap(), 5);
        let fast = convergence_bound(259_316, 2.0, 0.01).unwrap();
        assert!((fast as f64 / 630_000.0 - 1.0).abs() < 0.01, "{fast}");
        let slow = convergence_bound(259_316, 1.0, 0.01).unwrap();
        assert!((slow as f64 / 4_400_000.0 - 1.0).abs() < 0.10, "{slow}");
        assert!(slow > fast);
        assert!(convergence_bound(100, 0.5, 0.1).is_err());
        assert!(convergence_bound(0, 2.0, 0.1).is_err());
        assert!(convergence_bound(100, 2.0, 1.5).is_err());
    }

    #[test]
    fn analysis_params_slot_sizing() {
        let p = AnalysisParams::derive(0.05, 0.05, 2.0).unwrap();
        assert_eq!(p.sample_size, 7_587);
        // 2 * 7587 = 15174 -> 2^14 = 16384.
        assert_eq!(p.slot_bits, 14);
        assert!((1u64 << p.slot_bits) >= 2 * p.sample_size);
        assert!((1u64 << (p.slot_bits - 1)) < 2 * p.sample_size);
        assert_eq!(
            p.convergence_packets(),
            convergence_bound(7_587, 2.0, 0.05).unwrap()
        );
        assert!(AnalysisParams::derive(0.05, 0.05, 0.8).is_err());
    }

    #[test]
    fn uniform_sample_additive_error_bound() {
        // Oracle form of the frequency guarantee: true uniform M-subsets
        // (drawn directly, no sketch involved) keep the scaled flow count
        // within |S| * eps of the real size in all but a delta fraction of
        // resamples. M = ceil(3 eps^-2 log2(2/delta)) here.
        let (eps, delta) = (0.1f64, 0.05f64);
        let m = (3.0 / (eps * eps) * (2.0 / delta).log2()).ceil() as usize; // 1597
        let stream_len = 20_000usize;
        let f_x = 3_000usize; // flow x occupies the first f_x positions
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        let mut indices: Vec<usize> = (0..stream_len).collect();
        let mut failures = 0u32;
        let resamples = 1000;
        for _ in 0..resamples {
            indices.shuffle(&mut rng);
            let t_x = indices[..m].iter().filter(|&&i| i < f_x).count();
            let est = t_x as f64 * stream_len as f64 / m as f64;
            if (est - f_x as f64).abs() >= stream_len as f64 * eps {
                failures += 1;
            }
        }
        assert!(
            f64::from(failures) / f64::from(resamples) <= delta,
            "failure rate {failures}/{resamples} above delta"
        );
    }
}

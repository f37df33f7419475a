//! The experiment runner: a trace is routed over simulated switches, every
//! switch feeds its sketches, the controller merges them, and the estimates
//! are scored against exact ground truth.
//!
//! Runs are deterministic: all randomness comes from config seeds, and the
//! parallelism degree only partitions switches across workers, never the
//! merge order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baseline::{volume_estimate, CmDistinct, CountDistinctSketch, HierHh};
use crate::controller::{flow_size_distribution, AnalysisParams, GlobalSample};
use crate::flow::PacketRecord;
use crate::sample::{SampleMode, SampleSketch};
use crate::sim::metrics::{f1_scores, histogram_to_f64, rmse_over, wmrd, F1Scores};
use crate::sim::routing::{Router, RoutingModel};
use crate::sim::trace::{gen_zipf_trace, Trace};
use crate::sim::truth::{compute_ground_truth, GroundTruth};
use crate::{Error, Result};

fn default_true() -> bool {
    true
}

fn default_parallelism() -> usize {
    1
}

/// Where the packet stream comes from: exactly one of the generator
/// parameters (`source = "generate"`) or a trace file (`source = "file"`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skew: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub universe: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl TraceConfig {
    pub fn resolve(&self) -> Result<Trace> {
        match self.source.as_str() {
            "generate" => {
                if self.path.is_some() {
                    return Err(Error::InvalidParam(
                        "trace source is \"generate\" but a file path is also set".into(),
                    ));
                }
                let n = self
                    .n
                    .ok_or_else(|| Error::InvalidParam("generate needs trace.n".into()))?;
                let skew = self
                    .skew
                    .ok_or_else(|| Error::InvalidParam("generate needs trace.skew".into()))?;
                let universe = self
                    .universe
                    .ok_or_else(|| Error::InvalidParam("generate needs trace.universe".into()))?;
                gen_zipf_trace(n, skew, universe, self.seed)
            }
            "file" => {
                if self.n.is_some() || self.skew.is_some() || self.universe.is_some() {
                    return Err(Error::InvalidParam(
                        "trace source is \"file\" but generator parameters are also set".into(),
                    ));
                }
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParam("file source needs trace.path".into()))?;
                Trace::load(Path::new(path))
            }
            other => Err(Error::InvalidParam(format!(
                "unknown trace source {other:?} (want \"generate\" or \"file\")"
            ))),
        }
    }
}

/// Routing model selection; `model` picks the kind, the remaining fields
/// apply where meaningful.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingConfig {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_len: Option<u32>,
    #[serde(default)]
    pub seed: u64,
}

impl RoutingConfig {
    pub fn resolve(&self) -> Result<RoutingModel> {
        let k = || {
            self.k
                .ok_or_else(|| Error::InvalidParam(format!("routing model {} needs k", self.model)))
        };
        match self.model.as_str() {
            "single-switch" => Ok(RoutingModel::SingleSwitch),
            "uniform-subset" => Ok(RoutingModel::UniformSubset {
                k: k()?,
                p: self.p.ok_or_else(|| {
                    Error::InvalidParam("uniform-subset routing needs p".into())
                })?,
            }),
            "hop-count" => Ok(RoutingModel::HopCount {
                k: k()?,
                n: self.n.ok_or_else(|| {
                    Error::InvalidParam("hop-count routing needs n (network size)".into())
                })?,
            }),
            "fixed-path-per-flow" => Ok(RoutingModel::FixedPathPerFlow {
                k: k()?,
                path_len: self.path_len.ok_or_else(|| {
                    Error::InvalidParam("fixed-path-per-flow routing needs path_len".into())
                })?,
            }),
            other => Err(Error::InvalidParam(format!(
                "unknown routing model {other:?}"
            ))),
        }
    }
}

/// Sampler sizing: either an explicit slot bit-width `m`, or accuracy
/// targets `(epsilon, delta, alpha)` from which the slot count is derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SketchConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl SketchConfig {
    pub fn resolve(&self) -> Result<(u32, Option<AnalysisParams>)> {
        match (self.m, self.epsilon, self.delta, self.alpha) {
            (Some(m), None, None, None) => Ok((m, None)),
            (None, Some(e), Some(d), Some(a)) => {
                let params = AnalysisParams::derive(e, d, a)?;
                Ok((params.slot_bits, Some(params)))
            }
            _ => Err(Error::InvalidParam(
                "sketch needs either m alone or all of epsilon, delta, alpha".into(),
            )),
        }
    }
}

/// Which estimators run, with their thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub theta: f64,
    pub psi_ss: f64,
    pub prefix_lengths: Vec<u8>,
    /// Subset of the task names; absent runs everything.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimators: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct TaskToggles {
    cardinality: bool,
    frequency: bool,
    heavy_hitters: bool,
    hierarchical: bool,
    superspreaders: bool,
    fsd: bool,
}

impl TaskConfig {
    fn toggles(&self) -> Result<TaskToggles> {
        let mut t = TaskToggles {
            cardinality: false,
            frequency: false,
            heavy_hitters: false,
            hierarchical: false,
            superspreaders: false,
            fsd: false,
        };
        let Some(names) = &self.estimators else {
            return Ok(TaskToggles {
                cardinality: true,
                frequency: true,
                heavy_hitters: true,
                hierarchical: true,
                superspreaders: true,
                fsd: true,
            });
        };
        for name in names {
            match name.as_str() {
                "cardinality" => t.cardinality = true,
                "frequency" => t.frequency = true,
                "heavy-hitters" => t.heavy_hitters = true,
                "hierarchical-heavy-hitters" => t.hierarchical = true,
                "superspreaders" => t.superspreaders = true,
                "flow-size-distribution" => t.fsd = true,
                other => {
                    return Err(Error::InvalidParam(format!("unknown estimator {other:?}")))
                }
            }
        }
        Ok(t)
    }
}

/// Count-distinct baseline structures run alongside the samplers.
/// The heavy-hitter hierarchy monitors 32-bit source addresses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub volume: bool,
    #[serde(default = "default_true")]
    pub frequency: bool,
    #[serde(default)]
    pub hhh: bool,
}

/// Runner knobs that are not part of the measurement itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_true")]
    pub checkpoints: bool,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            checkpoints: true,
            parallelism: 1,
        }
    }
}

/// One experiment manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub run: RunConfig,
    pub trace: TraceConfig,
    pub routing: RoutingConfig,
    pub sketch: SketchConfig,
    pub tasks: TaskConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreqRow {
    pub flow: String,
    pub actual: u64,
    pub estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefixEntry {
    pub length: u8,
    pub prefix: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthSummary {
    pub stream_len: u64,
    pub distinct_flows: u64,
    pub heavy_hitters: Vec<String>,
    pub hhh: Vec<PrefixEntry>,
    pub superspreaders: Vec<String>,
    pub size_hist: Vec<(u64, u64)>,
}

impl From<&GroundTruth> for TruthSummary {
    fn from(truth: &GroundTruth) -> Self {
        Self {
            stream_len: truth.stream_len,
            distinct_flows: truth.distinct_flows,
            heavy_hitters: truth.heavy_hitters.iter().map(|k| k.to_hex()).collect(),
            hhh: truth
                .hhh_pairs()
                .into_iter()
                .map(|(length, v)| PrefixEntry {
                    length,
                    prefix: format!("{v:08x}"),
                })
                .collect(),
            superspreaders: truth
                .superspreaders
                .iter()
                .map(|s| format!("{s:08x}"))
                .collect(),
            size_hist: truth.size_hist.iter().map(|(&i, &f)| (i, f)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineEstimates {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<FreqRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hhh_sources: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hhh_threshold_floored: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub sample_size_packets: u32,
    pub sample_size_flows: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cardinality_packets: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cardinality_flows: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling_probability_packets: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling_probability_flows: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<FreqRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heavy_hitters: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hhh: Option<Vec<PrefixEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superspreaders: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_size_hist: Option<Vec<(u64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineEstimates>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heavy_hitters: Option<F1Scores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hhh: Option<F1Scores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superspreaders: Option<F1Scores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fsd_wmrd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_volume_relative_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_frequency_rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_hhh: Option<F1Scores>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRow {
    pub packets: u64,
    pub sample_size_packets: u32,
    pub sample_size_flows: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedInfo {
    pub slot_bits: u32,
    pub switch_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisParams>,
}

/// Everything a run produced: resolved config, truth, estimates, metrics,
/// and the fill-level trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub library_version: String,
    pub config: ExperimentConfig,
    pub resolved: ResolvedInfo,
    pub truth: TruthSummary,
    pub estimates: Estimates,
    pub metrics: MetricsSummary,
    pub convergence: Vec<CheckpointRow>,
}

struct SwitchState {
    packet: SampleSketch,
    flow: SampleSketch,
    volume: Option<CountDistinctSketch>,
    freq: Option<CmDistinct>,
    hhh: Option<HierHh>,
}

impl SwitchState {
    fn new(m: u32, seed: u64, baseline: &Option<BaselineConfig>) -> Result<Self> {
        let (volume, freq, hhh) = match baseline {
            Some(b) => (
                if b.volume {
                    Some(CountDistinctSketch::with_epsilon(b.epsilon, b.seed)?)
                } else {
                    None
                },
                if b.frequency {
                    Some(CmDistinct::new(b.epsilon, b.delta, b.seed)?)
                } else {
                    None
                },
                if b.hhh {
                    Some(HierHh::new(32, b.epsilon, b.delta, b.seed)?)
                } else {
                    None
                },
            ),
            None => (None, None, None),
        };
        Ok(Self {
            packet: SampleSketch::new(SampleMode::Packet, m, seed)?,
            flow: SampleSketch::new(SampleMode::Flow, m, seed)?,
            volume,
            freq,
            hhh,
        })
    }

    fn observe(&mut self, p: &PacketRecord) -> Result<()> {
        self.packet.add(p);
        self.flow.add(p);
        if let Some(v) = &mut self.volume {
            // Packet identity: the unique pid paired with its flow.
            let mut item = [0u8; 16];
            item[..8].copy_from_slice(&p.pid.to_be_bytes());
            item[8..].copy_from_slice(p.fid.flow_key().as_bytes());
            v.add(&item);
        }
        if let Some(f) = &mut self.freq {
            f.add(p.fid.flow_key().as_bytes(), &p.pid.to_be_bytes());
        }
        if let Some(h) = &mut self.hhh {
            h.add(u64::from(p.fid.src_ip()), p.pid)?;
        }
        Ok(())
    }
}

/// Checkpoint schedule: powers of two up to the stream length, plus the
/// stream length itself.
fn checkpoint_schedule(n: u64) -> Vec<u64> {
    let mut points = Vec::new();
    let mut t = 1u64;
    while t < n {
        points.push(t);
        t = t.saturating_mul(2);
    }
    points.push(n);
    points
}

/// Runs one experiment end to end.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let trace = config.trace.resolve()?;
    if trace.is_empty() {
        return Err(Error::InvalidParam("trace holds no packets".into()));
    }
    let model = config.routing.resolve()?;
    let router = Router::new(model, config.routing.seed)?;
    let k = router.switch_count() as usize;
    let (slot_bits, analysis) = config.sketch.resolve()?;
    let toggles = config.tasks.toggles()?;
    let truth = compute_ground_truth(
        &trace,
        config.tasks.theta,
        config.tasks.psi_ss,
        &config.tasks.prefix_lengths,
    )?;

    let checkpoints = if config.run.checkpoints {
        checkpoint_schedule(trace.len() as u64)
    } else {
        Vec::new()
    };

    let degree = config.run.parallelism.clamp(1, k);
    let mut switch_states: Vec<SwitchState> = Vec::with_capacity(k);
    let mut partials: Vec<Vec<(SampleSketch, SampleSketch)>> = Vec::new();

    // Switches are partitioned into contiguous ranges, one worker each; the
    // per-packet assignment is a pure function, so each worker recomputes it
    // independently and results cannot depend on the degree.
    let ranges: Vec<(usize, usize)> = {
        let base = k / degree;
        let extra = k % degree;
        let mut out = Vec::with_capacity(degree);
        let mut start = 0;
        for w in 0..degree {
            let len = base + usize::from(w < extra);
            out.push((start, start + len));
            start += len;
        }
        out
    };

    type WorkerOutput = (Vec<SwitchState>, Vec<(SampleSketch, SampleSketch)>);
    let worker = |range: (usize, usize)| -> Result<WorkerOutput> {
        let (lo, hi) = range;
        let mut states = (lo..hi)
            .map(|_| SwitchState::new(slot_bits, config.sketch.seed, &config.baseline))
            .collect::<Result<Vec<_>>>()?;
        let mut local_partials = Vec::with_capacity(checkpoints.len());
        let mut next_cp = 0usize;
        let mut buf = Vec::new();
        for (i, p) in trace.packets().iter().enumerate() {
            router.switches_for(p, &mut buf);
            for &s in &buf {
                let s = s as usize;
                if s >= lo && s < hi {
                    states[s - lo].observe(p)?;
                }
            }
            while next_cp < checkpoints.len() && checkpoints[next_cp] == (i + 1) as u64 {
                next_cp += 1;
                let mut pkt = SampleSketch::new(SampleMode::Packet, slot_bits, config.sketch.seed)?;
                let mut flw = SampleSketch::new(SampleMode::Flow, slot_bits, config.sketch.seed)?;
                for st in &states {
                    pkt.merge_from(&st.packet)?;
                    flw.merge_from(&st.flow)?;
                }
                local_partials.push((pkt, flw));
            }
        }
        Ok((states, local_partials))
    };

    if degree == 1 {
        let (states, local) = worker(ranges[0])?;
        switch_states = states;
        partials.push(local);
    } else {
        let results: Vec<Result<_>> = std::thread::scope(|scope| {
            let handles: Vec<_> = ranges
                .iter()
                .map(|&range| scope.spawn(move || worker(range)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker does not panic"))
                .collect()
        });
        for r in results {
            let (states, local) = r?;
            switch_states.extend(states);
            partials.push(local);
        }
    }

    // Global fill-level trace: fold the per-worker partials in switch order.
    let mut convergence = Vec::with_capacity(checkpoints.len());
    for (ci, &t) in checkpoints.iter().enumerate() {
        let mut pkt = SampleSketch::new(SampleMode::Packet, slot_bits, config.sketch.seed)?;
        let mut flw = SampleSketch::new(SampleMode::Flow, slot_bits, config.sketch.seed)?;
        for local in &partials {
            pkt.merge_from(&local[ci].0)?;
            flw.merge_from(&local[ci].1)?;
        }
        convergence.push(CheckpointRow {
            packets: t,
            sample_size_packets: pkt.filled_count(),
            sample_size_flows: flw.filled_count(),
        });
    }

    let packet_sketches: Vec<SampleSketch> =
        switch_states.iter().map(|s| s.packet.clone()).collect();
    let flow_sketches: Vec<SampleSketch> = switch_states.iter().map(|s| s.flow.clone()).collect();
    let packets_gs = GlobalSample::merge_all(&packet_sketches)?;
    let flows_gs = GlobalSample::merge_all(&flow_sketches)?;

    build_report(
        config,
        ResolvedInfo {
            slot_bits,
            switch_count: k as u32,
            analysis,
        },
        &truth,
        &packets_gs,
        &flows_gs,
        &switch_states,
        toggles,
        convergence,
    )
}

#[allow(clippy::too_many_arguments)]
fn build_report(
    config: &ExperimentConfig,
    resolved: ResolvedInfo,
    truth: &GroundTruth,
    packets_gs: &GlobalSample,
    flows_gs: &GlobalSample,
    switch_states: &[SwitchState],
    toggles: TaskToggles,
    convergence: Vec<CheckpointRow>,
) -> Result<ExperimentReport> {
    let truth_summary = TruthSummary::from(truth);

    let mut estimates = Estimates {
        sample_size_packets: packets_gs.sample_size(),
        sample_size_flows: flows_gs.sample_size(),
        cardinality_packets: None,
        cardinality_flows: None,
        sampling_probability_packets: None,
        sampling_probability_flows: None,
        frequencies: None,
        heavy_hitters: None,
        hhh: None,
        superspreaders: None,
        flow_size_hist: None,
        baseline: None,
    };
    let mut metrics = MetricsSummary {
        frequency_rmse: None,
        heavy_hitters: None,
        hhh: None,
        superspreaders: None,
        fsd_wmrd: None,
        baseline_volume_relative_error: None,
        baseline_frequency_rmse: None,
        baseline_hhh: None,
    };

    if toggles.cardinality {
        estimates.cardinality_packets = Some(packets_gs.cardinality());
        estimates.cardinality_flows = Some(flows_gs.cardinality());
        estimates.sampling_probability_packets = packets_gs.sampling_probability().ok();
        estimates.sampling_probability_flows = flows_gs.sampling_probability().ok();
    }

    if toggles.frequency {
        let counts = packets_gs.flow_counts()?;
        let p_hat = packets_gs.sampling_probability().ok();
        let mut rows = Vec::with_capacity(truth.flow_sizes.len());
        let mut est_map = BTreeMap::new();
        for (key, &actual) in &truth.flow_sizes {
            let estimate = match (counts.get(key), p_hat) {
                (Some(&t), Some(p)) => f64::from(t) / p,
                _ => 0.0,
            };
            est_map.insert(*key, estimate);
            rows.push(FreqRow {
                flow: key.to_hex(),
                actual,
                estimate,
            });
        }
        metrics.frequency_rmse = Some(rmse_over(&est_map, &truth.flow_sizes));
        estimates.frequencies = Some(rows);
    }

    if toggles.heavy_hitters {
        let reported = packets_gs.heavy_hitters(truth.theta)?;
        metrics.heavy_hitters = Some(f1_scores(&reported, &truth.heavy_hitters));
        estimates.heavy_hitters = Some(reported.iter().map(|k| k.to_hex()).collect());
    }

    if toggles.hierarchical {
        let reported = packets_gs.hierarchical_heavy_hitters(truth.theta, &truth.prefix_lengths)?;
        metrics.hhh = Some(f1_scores(&reported, &truth.hhh_pairs()));
        estimates.hhh = Some(
            reported
                .into_iter()
                .map(|(length, v)| PrefixEntry {
                    length,
                    prefix: format!("{v:08x}"),
                })
                .collect(),
        );
    }

    if toggles.superspreaders {
        let reported = flows_gs.superspreaders(truth.psi_ss)?;
        metrics.superspreaders = Some(f1_scores(&reported, &truth.superspreaders));
        estimates.superspreaders = Some(reported.iter().map(|s| format!("{s:08x}")).collect());
    }

    if toggles.fsd {
        match flow_size_distribution(packets_gs, flows_gs) {
            Ok(hist) => {
                metrics.fsd_wmrd = Some(wmrd(&hist, &histogram_to_f64(&truth.size_hist)));
                estimates.flow_size_hist = Some(hist.into_iter().collect());
            }
            Err(Error::EmptySample) => {} // nothing sampled; leave unset
            Err(e) => return Err(e),
        }
    }

    if let Some(bl) = &config.baseline {
        let mut out = BaselineEstimates {
            volume: None,
            frequencies: None,
            hhh_sources: None,
            hhh_threshold_floored: None,
        };
        if bl.volume {
            let counters: Vec<CountDistinctSketch> = switch_states
                .iter()
                .map(|s| s.volume.clone().expect("volume baseline enabled"))
                .collect();
            let est = volume_estimate(&counters)?;
            out.volume = Some(est);
            metrics.baseline_volume_relative_error =
                Some((est - truth.stream_len as f64).abs() / truth.stream_len as f64);
        }
        if bl.frequency {
            let matrices: Vec<CmDistinct> = switch_states
                .iter()
                .map(|s| s.freq.clone().expect("frequency baseline enabled"))
                .collect();
            let merged = CmDistinct::merge_many(&matrices)?;
            let mut rows = Vec::with_capacity(truth.flow_sizes.len());
            let mut est_map = BTreeMap::new();
            for (key, &actual) in &truth.flow_sizes {
                let estimate = merged.query(key.as_bytes());
                est_map.insert(*key, estimate);
                rows.push(FreqRow {
                    flow: key.to_hex(),
                    actual,
                    estimate,
                });
            }
            metrics.baseline_frequency_rmse = Some(rmse_over(&est_map, &truth.flow_sizes));
            out.frequencies = Some(rows);
        }
        if bl.hhh {
            let mut merged: Option<HierHh> = None;
            for s in switch_states {
                let h = s.hhh.as_ref().expect("hhh baseline enabled");
                match &mut merged {
                    None => merged = Some(h.clone()),
                    Some(m) => m.merge_from(h)?,
                }
            }
            let mut merged = merged.ok_or(Error::EmptySample)?;
            merged.finalize();
            let report = merged.query(truth.theta)?;
            let reported: std::collections::BTreeSet<u32> =
                report.reported.iter().map(|&x| x as u32).collect();
            // Scored against the full-length source prefixes when /32 was
            // requested, since the hierarchy monitors whole source addresses.
            if let Some(t32) = truth.hhh.get(&32) {
                metrics.baseline_hhh = Some(f1_scores(&reported, t32));
            }
            out.hhh_sources = Some(reported.iter().map(|s| format!("{s:08x}")).collect());
            out.hhh_threshold_floored = Some(report.threshold_floored);
        }
        estimates.baseline = Some(out);
    }

    Ok(ExperimentReport {
        library_version: crate::VERSION.to_string(),
        config: config.clone(),
        resolved,
        truth: truth_summary,
        estimates,
        metrics,
        convergence,
    })
}

/// Pretty JSON with a trailing newline; byte-stable for a given report.
pub fn report_to_json(report: &ExperimentReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_report_json(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(report_to_json(report).as_bytes())?;
    f.flush()?;
    Ok(())
}

/// Long-format CSV (`task,x,metric,value`) for external plotting.
pub fn write_series_csv(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "task,x,metric,value")?;
    for row in &report.convergence {
        writeln!(
            f,
            "convergence,{},sample_size_packets,{}",
            row.packets, row.sample_size_packets
        )?;
        writeln!(
            f,
            "convergence,{},sample_size_flows,{}",
            row.packets, row.sample_size_flows
        )?;
    }
    let m = &report.metrics;
    if let Some(v) = m.frequency_rmse {
        writeln!(f, "frequency,0,rmse,{v}")?;
    }
    for (task, scores) in [
        ("heavy_hitters", &m.heavy_hitters),
        ("hhh", &m.hhh),
        ("superspreaders", &m.superspreaders),
        ("baseline_hhh", &m.baseline_hhh),
    ] {
        if let Some(s) = scores {
            writeln!(f, "{task},0,precision,{}", s.precision)?;
            writeln!(f, "{task},0,recall,{}", s.recall)?;
            writeln!(f, "{task},0,f1,{}", s.f1)?;
        }
    }
    if let Some(v) = m.fsd_wmrd {
        writeln!(f, "flow_size_distribution,0,wmrd,{v}")?;
    }
    if let Some(v) = m.baseline_volume_relative_error {
        writeln!(f, "baseline_volume,0,relative_error,{v}")?;
    }
    if let Some(v) = m.baseline_frequency_rmse {
        writeln!(f, "baseline_frequency,0,rmse,{v}")?;
    }
    if let Some(hist) = &report.estimates.flow_size_hist {
        for (size, count) in hist {
            writeln!(f, "flow_size_distribution,{size},estimate,{count}")?;
        }
    }
    for (size, count) in &report.truth.size_hist {
        writeln!(f, "flow_size_distribution,{size},actual,{count}")?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            run: RunConfig::default(),
            trace: TraceConfig {
                source: "generate".into(),
                n: Some(20_000),
                skew: Some(1.0),
                universe: Some(500),
                seed: 7,
                path: None,
            },
            routing: RoutingConfig {
                model: "uniform-subset".into(),
                k: Some(4),
                p: Some(0.5),
                n: None,
                path_len: None,
                seed: 3,
            },
            sketch: SketchConfig {
                m: Some(10),
                epsilon: None,
                delta: None,
                alpha: None,
                seed: 5,
            },
            tasks: TaskConfig {
                theta: 0.02,
                psi_ss: 5.0,
                prefix_lengths: vec![8, 16, 24, 32],
                estimators: None,
            },
            baseline: Some(BaselineConfig {
                epsilon: 0.2,
                delta: 0.25,
                seed: 11,
                volume: true,
                frequency: true,
                hhh: false,
            }),
        }
    }

    #[test]
    fn deterministic_reports() {
        let config = small_config();
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(report_to_json(&a), report_to_json(&b));
    }

    #[test]
    fn parallelism_does_not_change_results() {
        // Only the config echo may differ between degrees; every produced
        // number must be identical.
        let mut config = small_config();
        let serial = run_experiment(&config).unwrap();
        config.run.parallelism = 3;
        let parallel = run_experiment(&config).unwrap();
        assert_eq!(serial.truth, parallel.truth);
        assert_eq!(serial.estimates, parallel.estimates);
        assert_eq!(serial.metrics, parallel.metrics);
        assert_eq!(serial.convergence, parallel.convergence);
    }

    #[test]
    fn duplicated_routing_equals_single_switch() {
        // End-to-end routing obliviousness: estimates identical whether one
        // switch sees everything or eight see overlapping substreams.
        let mut config = small_config();
        config.baseline = None;
        config.routing = RoutingConfig {
            model: "single-switch".into(),
            k: None,
            p: None,
            n: None,
            path_len: None,
            seed: 0,
        };
        let single = run_experiment(&config).unwrap();
        config.routing = RoutingConfig {
            model: "hop-count".into(),
            k: Some(8),
            p: None,
            n: Some(98_400.0),
            path_len: None,
            seed: 17,
        };
        let multi = run_experiment(&config).unwrap();
        assert_eq!(single.estimates, multi.estimates);
        assert_eq!(single.metrics, multi.metrics);
        // The fill-level trace differs only in timing, not the final state.
        assert_eq!(
            single.convergence.last().unwrap().sample_size_packets,
            multi.convergence.last().unwrap().sample_size_packets
        );
    }

    #[test]
    fn metrics_recomputable_from_embedded_estimates() {
        let report = run_experiment(&small_config()).unwrap();
        // Frequency RMSE from the stored rows.
        let rows = report.estimates.frequencies.as_ref().unwrap();
        let mut sum = 0.0;
        for r in rows {
            let d = r.estimate - r.actual as f64;
            sum += d * d;
        }
        let rmse = (sum / rows.len() as f64).sqrt();
        assert!((rmse - report.metrics.frequency_rmse.unwrap()).abs() < 1e-9);
        // Heavy-hitter F1 from the stored sets.
        let est: std::collections::BTreeSet<String> = report
            .estimates
            .heavy_hitters
            .clone()
            .unwrap()
            .into_iter()
            .collect();
        let truth: std::collections::BTreeSet<String> =
            report.truth.heavy_hitters.iter().cloned().collect();
        let scores = f1_scores(&est, &truth);
        assert_eq!(scores, report.metrics.heavy_hitters.unwrap());
    }

    #[test]
    fn estimator_subset_runs_only_requested_tasks() {
        let mut config = small_config();
        config.baseline = None;
        config.tasks.estimators = Some(vec!["cardinality".into(), "heavy-hitters".into()]);
        let report = run_experiment(&config).unwrap();
        assert!(report.estimates.cardinality_packets.is_some());
        assert!(report.estimates.heavy_hitters.is_some());
        assert!(report.estimates.frequencies.is_none());
        assert!(report.estimates.superspreaders.is_none());
        assert!(report.metrics.fsd_wmrd.is_none());
        config.tasks.estimators = Some(vec!["bogus".into()]);
        assert!(run_experiment(&config).is_err());
    }

    #[test]
    fn accuracy_targets_size_the_sketch() {
        let mut config = small_config();
        config.baseline = None;
        config.sketch = SketchConfig {
            m: None,
            epsilon: Some(0.05),
            delta: Some(0.05),
            alpha: Some(2.0),
            seed: 5,
        };
        let report = run_experiment(&config).unwrap();
        // 2 * 7587 rounds up to 2^14 slots.
        assert_eq!(report.resolved.slot_bits, 14);
        let analysis = report.resolved.analysis.unwrap();
        assert_eq!(analysis.sample_size, 7587);
        assert!((1u64 << report.resolved.slot_bits) >= 2 * analysis.sample_size);
    }

    #[test]
    fn config_validation_errors() {
        let mut config = small_config();
        config.trace.path = Some("x.csv".into());
        assert!(run_experiment(&config).is_err());
        let mut config = small_config();
        config.sketch.epsilon = Some(0.1);
        assert!(run_experiment(&config).is_err());
        let mut config = small_config();
        config.routing.model = "mystery".into();
        assert!(run_experiment(&config).is_err());
    }

    #[test]
    fn checkpoint_schedule_shape() {
        assert_eq!(checkpoint_schedule(1), vec![1]);
        assert_eq!(checkpoint_schedule(8), vec![1, 2, 4, 8]);
        assert_eq!(checkpoint_schedule(10), vec![1, 2, 4, 8, 10]);
        let config = {
            let mut c = small_config();
            c.baseline = None;
            c
        };
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.convergence.last().unwrap().packets, 20_000);
        // Fill level never decreases over time.
        for w in report.convergence.windows(2) {
            assert!(w[1].sample_size_packets >= w[0].sample_size_packets);
        }
    }

    #[test]
    fn baseline_volume_close_to_stream_length() {
        let report = run_experiment(&small_config()).unwrap();
        let rel = report.metrics.baseline_volume_relative_error.unwrap();
        assert!(rel < 0.1, "baseline volume off by {rel}");
    }

    #[test]
    fn series_csv_and_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_experiment(&small_config()).unwrap();
        let json_path = dir.path().join("report.json");
        write_report_json(&report, &json_path).unwrap();
        let back: ExperimentReport =
            serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        assert_eq!(back, report);
        let csv_path = dir.path().join("series.csv");
        write_series_csv(&report, &csv_path).unwrap();
        let csv = std::fs::read_to_string(&csv_path).unwrap();
        assert!(csv.starts_with("task,x,metric,value\n"));
        assert!(csv.contains("convergence,"));
    }
}

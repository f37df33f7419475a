//! Multi-switch measurement simulator: synthetic traces, routing models,
//! exact ground truth, accuracy metrics, and the experiment runner.

mod experiment;
mod gamma;
mod hopcount;
pub mod metrics;
mod routing;
mod trace;
mod truth;

pub use experiment::{
    run_experiment, report_to_json, write_report_json, write_series_csv, BaselineConfig,
    BaselineEstimates, CheckpointRow, Estimates, ExperimentConfig, ExperimentReport, FreqRow,
    MetricsSummary, PrefixEntry, ResolvedInfo, RoutingConfig, RunConfig, SketchConfig, TaskConfig,
    TraceConfig, TruthSummary,
};
pub use gamma::{reciprocal_gamma_coeffs, EULER_GAMMA};
pub use hopcount::{hop_count_distribution, mean_hops, median_hops, DEFAULT_MAX_HOPS};
pub use routing::{route, Router, RoutingModel};
pub use trace::{gen_zipf_trace, zipf_rank_fid, Trace};
pub use truth::{compute_ground_truth, GroundTruth};

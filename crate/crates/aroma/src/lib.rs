//! Routing-oblivious network-wide traffic measurement.
//!
//! Every measurement switch maintains the same hash-indexed sampler: `2^m`
//! slots, each retaining the identifier with the smallest rank among those
//! mapped to it. Because all switches share the hash seed, the per-slot
//! minimum is a global property of the packet set, so merging switch states
//! at a controller yields exactly the sampler a single omniscient switch
//! would have produced, no matter how packets were routed or duplicated.
//!
//! The crate provides:
//!
//! * [`sample`] — the per-switch packet/flow sampler and its merge.
//! * [`controller`] — merged-sample estimators: cardinality, sampling
//!   probability, per-flow frequency, heavy hitters, hierarchical heavy
//!   hitters, superspreaders, flow-size distribution, plus the sample-size
//!   and convergence formulas.
//! * [`baseline`] — mergeable count-distinct sketches and the distributed
//!   volume / frequency / heavy-hitter structures built from them.
//! * [`sim`] — synthetic traces, multi-switch routing models, exact ground
//!   truth, accuracy metrics, and the experiment runner.

pub mod baseline;
pub mod controller;
mod error;
pub mod flow;
pub mod hash;
pub mod sample;
pub mod sim;

pub use error::{Error, Result};

/// Library version embedded in experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

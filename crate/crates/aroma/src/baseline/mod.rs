//! Count-distinct-based distributed sketches.
//!
//! A mergeable distinct counter is the shared primitive: routers feed it
//! packet identities, the controller merges all instances, and duplicated
//! observations collapse because merging counts set union. On top of it sit
//! the distributed volume estimator, a count-min-style matrix of distinct
//! counters for frequency estimation, and a prefix hierarchy for heavy
//! hitters.

mod cm_distinct;
mod count_distinct;
mod hier_hh;

pub use cm_distinct::CmDistinct;
pub use count_distinct::{registers_for_epsilon, volume_estimate, CountDistinctSketch};
pub use hier_hh::{descendants, prefix_mask, HhhReport, HierHh};

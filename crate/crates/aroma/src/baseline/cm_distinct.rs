//! A `d x w` matrix of distinct counters for network-wide frequency
//! estimation.
//!
//! Every router keeps the same matrix and the same row hashes. A packet
//! `(x, i)` is inserted, as the pair, into one cell per row; a cell's
//! distinct count is therefore the total traffic of the flows mapped to it,
//! however the packets were spread over routers. The controller merges
//! matrices cell-wise and answers point queries from the minimum row.

use crate::baseline::count_distinct::{registers_for_epsilon, CountDistinctSketch};
use crate::hash::splitmix64;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"ACMD";
const FORMAT_VERSION: u8 = 1;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const ROW_SALT: u64 = 0x7f4a_7c15_9e37_79b9;

/// Distributed frequency-estimation matrix.
///
/// Construction follows the target `(epsilon, delta)`: width `ceil(4/eps)`,
/// depth `ceil(1 + log2(1/delta))`, per-cell accuracy `eps/8` with failure
/// probability `delta/(2d)`. The additive guarantee assumes `epsilon < 1/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct CmDistinct {
    epsilon: f64,
    delta: f64,
    eps_a: f64,
    width: u32,
    depth: u32,
    seed: u64,
    row_seeds: Vec<u64>,
    grid: Vec<CountDistinctSketch>, // row-major, depth x width
}

impl CmDistinct {
    pub fn new(epsilon: f64, delta: f64, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParam(format!(
                "epsilon {epsilon} outside (0, 1)"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParam(format!("delta {delta} outside (0, 1)")));
        }
        let width = (4.0 / epsilon).ceil() as u32;
        let depth = (1.0 + (1.0 / delta).log2()).ceil() as u32;
        let eps_a = epsilon / 8.0;
        let bits = registers_for_epsilon(eps_a)?;
        let mut grid = Vec::with_capacity((depth * width) as usize);
        for cell in 0..depth * width {
            grid.push(CountDistinctSketch::new(
                bits,
                splitmix64(seed ^ u64::from(cell).wrapping_mul(0x9e37_79b9)),
            )?);
        }
        let row_seeds = (0..depth)
            .map(|r| splitmix64(seed ^ ROW_SALT.wrapping_add(u64::from(r))))
            .collect();
        Ok(Self {
            epsilon,
            delta,
            eps_a,
            width,
            depth,
            seed,
            row_seeds,
            grid,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Column a key maps to in `row`; identical for all instances built
    /// from the same seed.
    pub fn column_of(&self, row: u32, key: &[u8]) -> u32 {
        let mut h = FNV_OFFSET ^ self.row_seeds[row as usize];
        for &b in key {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        (splitmix64(h) % u64::from(self.width)) as u32
    }

    /// Inserts the `(key, serial)` pair into one cell per row. Re-inserting
    /// the same pair never changes any cell.
    pub fn add(&mut self, key: &[u8], serial: &[u8]) {
        // Length-prefix the key so (key, serial) pairs cannot alias.
        let mut item = Vec::with_capacity(1 + key.len() + serial.len());
        item.push(key.len() as u8);
        item.extend_from_slice(key);
        item.extend_from_slice(serial);
        for row in 0..self.depth {
            let col = self.column_of(row, key);
            self.grid[(row * self.width + col) as usize].add(&item);
        }
    }

    /// Point query: `(1 + 2 eps_a) * min` over the key's row cells.
    pub fn query(&self, key: &[u8]) -> f64 {
        let mut best = f64::INFINITY;
        for row in 0..self.depth {
            let col = self.column_of(row, key);
            let est = self.grid[(row * self.width + col) as usize].query();
            if est < best {
                best = est;
            }
        }
        (1.0 + 2.0 * self.eps_a) * best
    }

    /// Cell-wise merge; requires identical parameters and seed.
    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.epsilon != other.epsilon
            || self.delta != other.delta
            || self.seed != other.seed
        {
            return Err(Error::Incompatible(
                "frequency matrices differ in parameters or seed".into(),
            ));
        }
        for (a, b) in self.grid.iter_mut().zip(&other.grid) {
            a.merge_from(b)?;
        }
        Ok(())
    }

    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    /// Merges every router instance into a fresh controller copy.
    pub fn merge_many(instances: &[Self]) -> Result<Self> {
        let mut iter = instances.iter();
        let first = iter.next().ok_or(Error::EmptySample)?;
        let mut merged = first.clone();
        for inst in iter {
            merged.merge_from(inst)?;
        }
        Ok(merged)
    }

    /// Serializes as `"ACMD" version reserved[3] epsilon delta seed cells`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.extend_from_slice(&[0, 0, 0]);
        out.extend_from_slice(&self.epsilon.to_le_bytes());
        out.extend_from_slice(&self.delta.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for cell in &self.grid {
            out.extend_from_slice(&cell.to_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 32 {
            return Err(Error::Format("frequency matrix blob too short".into()));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("bad frequency matrix magic".into()));
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", bytes[4])));
        }
        let epsilon = f64::from_le_bytes(bytes[8..16].try_into().expect("checked length"));
        let delta = f64::from_le_bytes(bytes[16..24].try_into().expect("checked length"));
        let seed = u64::from_le_bytes(bytes[24..32].try_into().expect("checked length"));
        let mut out = Self::new(epsilon, delta, seed)
            .map_err(|e| Error::Format(format!("bad stored parameters: {e}")))?;
        let mut rest = &bytes[32..];
        for cell in out.grid.iter_mut() {
            let cell_len = 16 + cell.register_count();
            if rest.len() < cell_len {
                return Err(Error::Format("truncated frequency matrix blob".into()));
            }
            let parsed = CountDistinctSketch::from_bytes(&rest[..cell_len])?;
            if parsed.register_bits() != cell.register_bits() {
                return Err(Error::Format("cell register width mismatch".into()));
            }
            *cell = parsed;
            rest = &rest[cell_len..];
        }
        if !rest.is_empty() {
            return Err(Error::Format("trailing bytes after frequency matrix".into()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet};

    fn key_of(flow: u64) -> [u8; 8] {
        flow.to_be_bytes()
    }

    #[test]
    fn dimensions_follow_parameters() {
        let c = CmDistinct::new(0.1, 0.25, 1).unwrap();
        assert_eq!(c.width(), 40);
        assert_eq!(c.depth(), 3);
        let c = CmDistinct::new(0.4, 0.1, 1).unwrap();
        assert_eq!(c.width(), 10);
        assert_eq!(c.depth(), 5); // ceil(1 + log2 10) = 5
        assert!(CmDistinct::new(0.0, 0.1, 1).is_err());
        assert!(CmDistinct::new(0.1, 1.0, 1).is_err());
    }

    #[test]
    fn cell_selection_is_deterministic_and_shared() {
        let a = CmDistinct::new(0.2, 0.25, 7).unwrap();
        let b = CmDistinct::new(0.2, 0.25, 7).unwrap();
        for flow in 0..100u64 {
            for row in 0..a.depth() {
                assert_eq!(a.column_of(row, &key_of(flow)), b.column_of(row, &key_of(flow)));
                assert!(a.column_of(row, &key_of(flow)) < a.width());
            }
        }
    }

    #[test]
    fn duplicate_pair_leaves_cells_unchanged() {
        let mut c = CmDistinct::new(0.2, 0.25, 3).unwrap();
        for i in 0..50u64 {
            c.add(&key_of(i % 5), &i.to_be_bytes());
        }
        let snapshot = c.clone();
        for i in 0..50u64 {
            c.add(&key_of(i % 5), &i.to_be_bytes());
        }
        assert_eq!(c, snapshot);
    }

    #[test]
    fn cells_match_set_tracking_oracle() {
        // Exact per-cell sets on a small stream; each cell's distinct count
        // must agree with its counter's estimate within the counter's error.
        let mut c = CmDistinct::new(0.4, 0.25, 11).unwrap();
        let mut oracle: HashMap<(u32, u32), HashSet<Vec<u8>>> = HashMap::new();
        for i in 0..3000u64 {
            let flow = i % 60;
            let key = key_of(flow);
            let serial = i.to_be_bytes();
            c.add(&key, &serial);
            let mut item = vec![key.len() as u8];
            item.extend_from_slice(&key);
            item.extend_from_slice(&serial);
            for row in 0..c.depth() {
                let col = c.column_of(row, &key);
                oracle.entry((row, col)).or_default().insert(item.clone());
            }
        }
        for ((row, col), set) in oracle {
            let est = c.grid[(row * c.width() + col) as usize].query();
            let truth = set.len() as f64;
            assert!(
                (est - truth).abs() <= truth * 0.15 + 3.0,
                "cell ({row},{col}): estimate {est} vs exact {truth}"
            );
        }
    }

    #[test]
    fn row_cells_dominate_own_flow_count() {
        // Each of a flow's row cells receives all of its pairs, so the true
        // per-cell distinct count is >= f_x and the min-row query cannot
        // undershoot beyond the counters' own error.
        let mut c = CmDistinct::new(0.4, 0.25, 31).unwrap();
        let mut truth: HashMap<u64, u64> = HashMap::new();
        let mut cell_sets: HashMap<(u32, u32), HashSet<u64>> = HashMap::new();
        for pid in 0..4000u64 {
            let flow = pid % 50;
            *truth.entry(flow).or_insert(0) += 1;
            c.add(&flow.to_be_bytes(), &pid.to_be_bytes());
            for row in 0..c.depth() {
                cell_sets
                    .entry((row, c.column_of(row, &flow.to_be_bytes())))
                    .or_default()
                    .insert(pid);
            }
        }
        let eps_a = 0.4 / 8.0;
        for (flow, &f_x) in &truth {
            let mut min_true = u64::MAX;
            for row in 0..c.depth() {
                let col = c.column_of(row, &flow.to_be_bytes());
                let cell_count = cell_sets[&(row, col)].len() as u64;
                assert!(cell_count >= f_x, "cell misses pairs of flow {flow}");
                min_true = min_true.min(cell_count);
            }
            let est = c.query(&flow.to_be_bytes());
            assert!(
                est / (1.0 + 2.0 * eps_a) >= (1.0 - eps_a) * f_x as f64 * 0.95,
                "flow {flow}: estimate {est} undershoots {f_x}"
            );
        }
    }

    #[test]
    fn query_nonnegative_for_unseen_keys() {
        let mut c = CmDistinct::new(0.2, 0.25, 5).unwrap();
        for i in 0..200u64 {
            c.add(&key_of(i % 3), &i.to_be_bytes());
        }
        assert!(c.query(&key_of(999)) >= 0.0);
        let empty = CmDistinct::new(0.2, 0.25, 5).unwrap();
        assert_eq!(empty.query(&key_of(1)), 0.0);
    }

    #[test]
    fn single_flow_close_to_exact() {
        let mut c = CmDistinct::new(0.2, 0.25, 9).unwrap();
        for i in 0..500u64 {
            c.add(&key_of(42), &i.to_be_bytes());
        }
        let est = c.query(&key_of(42));
        let eps_a = 0.2 / 8.0;
        let upper = 500.0 * (1.0 + 2.0 * eps_a) * (1.0 + eps_a) * 1.05;
        let lower = 500.0 * (1.0 - eps_a) * 0.95;
        assert!(est >= lower && est <= upper, "estimate {est}");
    }

    #[test]
    fn duplicated_traffic_not_double_counted() {
        let mut single = CmDistinct::new(0.2, 0.25, 21).unwrap();
        let mut r1 = CmDistinct::new(0.2, 0.25, 21).unwrap();
        let mut r2 = CmDistinct::new(0.2, 0.25, 21).unwrap();
        for i in 0..400u64 {
            let key = key_of(i % 8);
            let serial = i.to_be_bytes();
            single.add(&key, &serial);
            // Every packet visits both routers.
            r1.add(&key, &serial);
            r2.add(&key, &serial);
        }
        let merged = CmDistinct::merge_many(&[r1, r2]).unwrap();
        assert_eq!(merged, single);
        assert_eq!(merged.to_bytes(), single.to_bytes());
    }

    #[test]
    fn merge_identity_and_order_independence() {
        let mut a = CmDistinct::new(0.3, 0.2, 2).unwrap();
        let mut b = CmDistinct::new(0.3, 0.2, 2).unwrap();
        let mut c = CmDistinct::new(0.3, 0.2, 2).unwrap();
        for i in 0..300u64 {
            match i % 3 {
                0 => a.add(&key_of(i % 10), &i.to_be_bytes()),
                1 => b.add(&key_of(i % 10), &i.to_be_bytes()),
                _ => c.add(&key_of(i % 10), &i.to_be_bytes()),
            }
        }
        let empty = CmDistinct::new(0.3, 0.2, 2).unwrap();
        assert_eq!(a.merge(&empty).unwrap(), a);
        let abc = CmDistinct::merge_many(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let cba = CmDistinct::merge_many(&[c, b, a]).unwrap();
        assert_eq!(abc, cba);
    }

    #[test]
    fn merge_rejects_mismatch() {
        let a = CmDistinct::new(0.2, 0.25, 1).unwrap();
        assert!(a.merge(&CmDistinct::new(0.2, 0.25, 2).unwrap()).is_err());
        assert!(a.merge(&CmDistinct::new(0.3, 0.25, 1).unwrap()).is_err());
        assert!(CmDistinct::merge_many(&[]).is_err());
    }

    #[test]
    fn serialization_round_trip() {
        let mut c = CmDistinct::new(0.4, 0.25, 17).unwrap();
        for i in 0..200u64 {
            c.add(&key_of(i % 12), &i.to_be_bytes());
        }
        let bytes = c.to_bytes();
        assert_eq!(CmDistinct::from_bytes(&bytes).unwrap(), c);
        let mut bad = bytes.clone();
        bad[1] = b'X';
        assert!(CmDistinct::from_bytes(&bad).is_err());
        assert!(CmDistinct::from_bytes(&bytes[..40]).is_err());
    }
}

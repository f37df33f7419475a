//! Accuracy metrics: RMSE over flow sizes, F1 over reported sets, and the
//! weighted mean relative difference between size histograms.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Precision, recall, and their harmonic mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Scores a reported set against the true set. An empty report has
/// precision 1 (nothing wrong was said); an empty truth set has recall 1.
pub fn f1_scores<T: Ord>(reported: &BTreeSet<T>, truth: &BTreeSet<T>) -> F1Scores {
    let tp = reported.intersection(truth).count() as f64;
    let precision = if reported.is_empty() {
        1.0
    } else {
        tp / reported.len() as f64
    };
    let recall = if truth.is_empty() {
        1.0
    } else {
        tp / truth.len() as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    F1Scores {
        precision,
        recall,
        f1,
    }
}

/// Root mean square error of the estimates over the flows present in the
/// ground truth; unestimated flows count as 0.
pub fn rmse_over<K: Ord>(estimates: &BTreeMap<K, f64>, truth: &BTreeMap<K, u64>) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for (key, &actual) in truth {
        let est = estimates.get(key).copied().unwrap_or(0.0);
        let d = est - actual as f64;
        sum += d * d;
    }
    (sum / truth.len() as f64).sqrt()
}

/// Weighted mean relative difference between two size histograms:
/// `sum |F_i - G_i| / sum (F_i + G_i)/2`, in `[0, 2]`. Two empty histograms
/// agree perfectly (0); exactly one empty is complete disagreement (2).
pub fn wmrd(a: &BTreeMap<u64, f64>, b: &BTreeMap<u64, f64>) -> f64 {
    let keys: BTreeSet<u64> = a.keys().chain(b.keys()).copied().collect();
    let mut err = 0.0;
    let mut avg = 0.0;
    for k in keys {
        let x = a.get(&k).copied().unwrap_or(0.0);
        let y = b.get(&k).copied().unwrap_or(0.0);
        err += (x - y).abs();
        avg += (x + y) / 2.0;
    }
    if avg == 0.0 {
        0.0
    } else {
        err / avg
    }
}

/// Converts an exact (integer) histogram for comparison with estimates.
pub fn histogram_to_f64(h: &BTreeMap<u64, u64>) -> BTreeMap<u64, f64> {
    h.iter().map(|(&k, &v)| (k, v as f64)).collect()
}

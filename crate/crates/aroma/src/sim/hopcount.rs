//! Internet-like hop-count distribution.
//!
//! The probability that a packet travels `h` hops in an `N`-node network is
//! modeled by the truncated series
//! `P(h) = (1/N) * sum_{m=0}^{h-1} c_{m+1} (ln N)^{h-1-m} / (h-1-m)!`,
//! where `c_i` are the reciprocal-Gamma Taylor coefficients. The series
//! index counts hops beyond the first (every packet traverses at least one
//! hop), which places the median for `N = 98400` at 12. Truncation residue
//! is handled by clamping negative tail values and renormalizing.

use crate::sim::gamma::reciprocal_gamma_coeffs;

/// Default truncation point; series coefficients stay well-conditioned.
pub const DEFAULT_MAX_HOPS: usize = 26;

/// Probability vector over hop counts `0..=max_hops`; index `h` is the
/// probability of exactly `h` hops (`h = 0` carries none). `n` must be at
/// least 2 and `max_hops` at most 29.
pub fn hop_count_distribution(n: f64, max_hops: usize) -> Vec<f64> {
    assert!(n >= 2.0, "network size {n} must be >= 2");
    assert!(
        (1..=29).contains(&max_hops),
        "max_hops {max_hops} outside 1..=29"
    );
    let coeffs = reciprocal_gamma_coeffs(max_hops + 1);
    let ln_n = n.ln();
    let mut probs = vec![0.0f64; max_hops + 1];
    for (h, p) in probs.iter_mut().enumerate().skip(1) {
        let k = h - 1; // series index
        let mut term = 0.0;
        // sum_m c_{m+1} (ln N)^{k-m} / (k-m)!
        let mut pow_over_fact = ln_n.powi(k as i32) / factorial(k);
        for (m, coeff) in coeffs.iter().enumerate().take(k + 1) {
            term += coeff * pow_over_fact;
            // step (ln N)^{k-m}/(k-m)! -> (ln N)^{k-m-1}/(k-m-1)!
            pow_over_fact = pow_over_fact * (k - m) as f64 / ln_n;
        }
        *p = (term / n).max(0.0);
    }
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    probs
}

/// Smallest hop count whose cumulative probability reaches 1/2.
pub fn median_hops(probs: &[f64]) -> usize {
    let mut cdf = 0.0;
    for (h, p) in probs.iter().enumerate() {
        cdf += p;
        if cdf >= 0.5 {
            return h;
        }
    }
    probs.len() - 1
}

/// Expected hop count.
pub fn mean_hops(probs: &[f64]) -> f64 {
    probs.iter().enumerate().map(|(h, p)| h as f64 * p).sum()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_to_one_and_nonnegative() {
        for n in [2.0, 100.0, 98_400.0, 1e7] {
            let probs = hop_count_distribution(n, DEFAULT_MAX_HOPS);
            assert!(probs.iter().all(|&p| p >= 0.0));
            let total: f64 = probs.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert_eq!(probs[0], 0.0);
        }
    }

    #[test]
    fn internet_scale_median_is_twelve() {
        let probs = hop_count_distribution(98_400.0, DEFAULT_MAX_HOPS);
        assert_eq!(median_hops(&probs), 12);
        // Mean lands nearby.
        let mean = mean_hops(&probs);
        assert!((11.0..13.5).contains(&mean), "mean hops {mean}");
    }

    #[test]
    fn small_networks_have_short_paths() {
        let probs = hop_count_distribution(2.0, DEFAULT_MAX_HOPS);
        assert!(median_hops(&probs) <= 2);
    }

    #[test]
    #[should_panic(expected = "must be >= 2")]
    fn rejects_tiny_network() {
        hop_count_distribution(1.5, 10);
    }
}

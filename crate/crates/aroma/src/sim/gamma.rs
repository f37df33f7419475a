//! Taylor coefficients of the reciprocal Gamma function.
//!
//! `1/Gamma(z) = sum_{k>=1} c_k z^k` with `c_1 = 1` and `c_2` the
//! Euler-Mascheroni constant. Writing `1/Gamma(z) = z * exp(g(z))` with
//! `g(z) = gamma*z - sum_{k>=2} (-1)^k zeta(k) z^k / k`, the exponential's
//! coefficients follow from `f' = g' f`, which gives the recurrence below.

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Riemann zeta at integer `s >= 2` via Euler-Maclaurin summation.
fn zeta(s: u32) -> f64 {
    let s = f64::from(s);
    let n = 100.0f64;
    let mut sum = 0.0;
    let mut k = 1.0;
    while k < n {
        sum += k.powf(-s);
        k += 1.0;
    }
    // Tail: integral term, boundary term, and the first Bernoulli
    // corrections; with N = 100 the truncation error is far below 1e-14.
    sum += n.powf(1.0 - s) / (s - 1.0);
    sum += 0.5 * n.powf(-s);
    sum += s / 12.0 * n.powf(-s - 1.0);
    sum -= s * (s + 1.0) * (s + 2.0) / 720.0 * n.powf(-s - 3.0);
    sum += s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0 * n.powf(-s - 5.0);
    sum
}

/// First `count` Taylor coefficients `c_1..c_count` of `1/Gamma(z)`.
///
/// The `f64` recurrence loses accuracy past ~26 coefficients; callers must
/// stay at or below 30.
pub fn reciprocal_gamma_coeffs(count: usize) -> Vec<f64> {
    assert!(
        (1..=30).contains(&count),
        "coefficient count {count} outside 1..=30"
    );
    // f_0 = 1; (m+1) f_{m+1} = gamma f_m + sum_{i>=1} (-1)^i zeta(i+1) f_{m-i}.
    let mut f = vec![1.0f64];
    for m in 0..count - 1 {
        let mut acc = EULER_GAMMA * f[m];
        for i in 1..=m {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * zeta(i as u32 + 1) * f[m - i];
        }
        f.push(acc / (m as f64 + 1.0));
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_known_values() {
        assert!((zeta(2) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
        assert!((zeta(4) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-13);
        assert!((zeta(3) - 1.202_056_903_159_594).abs() < 1e-12);
    }

    #[test]
    fn first_coefficients() {
        let c = reciprocal_gamma_coeffs(5);
        assert_eq!(c[0], 1.0);
        assert!((c[1] - EULER_GAMMA).abs() < 1e-15);
        assert!((c[2] - -0.655_878_071_520_253_9).abs() < 1e-12);
        assert!((c[3] - -0.042_002_635_034_095_24).abs() < 1e-10);
        assert!((c[4] - 0.166_538_611_382_291_5).abs() < 1e-10);
    }

    #[test]
    fn series_sums_to_reciprocal_gamma() {
        let c = reciprocal_gamma_coeffs(26);
        // 1/Gamma(1) = 1.
        let at_one: f64 = c.iter().sum();
        assert!((at_one - 1.0).abs() < 1e-8, "sum at z=1 is {at_one}");
        // 1/Gamma(0.5) = 1/sqrt(pi).
        let mut at_half = 0.0;
        let mut z = 0.5f64;
        for coef in &c {
            at_half += coef * z;
            z *= 0.5;
        }
        let expect = 1.0 / std::f64::consts::PI.sqrt();
        assert!((at_half - expect).abs() < 1e-10, "sum at z=0.5 is {at_half}");
    }

    #[test]
    #[should_panic(expected = "outside 1..=30")]
    fn rejects_too_many_coefficients() {
        reciprocal_gamma_coeffs(31);
    }
}

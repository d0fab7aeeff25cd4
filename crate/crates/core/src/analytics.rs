//! Closed-form laws of the return structure.
//!
//! `R` is the number of visits to 0 strictly after time 0. Excursion `k`
//! (starting after the `k`-th visit, counting time 0) runs with constant
//! up-probability `p_k = 1/2 + k*delta`, so it ends at 0 with probability
//! `1 - 2k*delta` and `P(R >= k) = prod_{i=1..k} (1 - 2 i delta)`.

use serde::{Deserialize, Serialize};

/// Below this delta the survival product is accumulated in log space.
pub const LOG_SPACE_DELTA: f64 = 1e-4;

/// `P(R >= k) = prod_{i=1..k} max(1 - 2 i delta, 0)`.
pub fn returns_survival(k: u64, delta: f64) -> f64 {
    survival_table(k, delta).pop().unwrap_or(1.0)
}

/// `[P(R >= 0), P(R >= 1), ..., P(R >= kmax)]`.
pub fn survival_table(kmax: u64, delta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax as usize + 1);
    out.push(1.0);
    if delta < LOG_SPACE_DELTA {
        let mut log_s = 0.0f64;
        for i in 1..=kmax {
            let f = 1.0 - 2.0 * i as f64 * delta;
            if f <= 0.0 {
                out.resize(kmax as usize + 1, 0.0);
                return out;
            }
            log_s += (-2.0 * i as f64 * delta).ln_1p();
            out.push(log_s.exp());
        }
    } else {
        let mut s = 1.0f64;
        for i in 1..=kmax {
            s *= (1.0 - 2.0 * i as f64 * delta).max(0.0);
            out.push(s);
        }
    }
    out
}

/// Distribution function `1 - exp(-x^2/2)` of the variable `eta`.
pub fn rayleigh_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x * x / 2.0).exp_m1()
    }
}

/// Distribution function of the slope `2 sqrt(c) eta`: `1 - exp(-x^2/(8c))`.
pub fn slope_limit_cdf(x: f64, c: f64) -> f64 {
    rayleigh_cdf(x / (2.0 * c.sqrt()))
}

/// Limit law of `sqrt(delta) * R` obtained by summing the logarithm of the
/// survival product: `P(sqrt(delta) R >= x) -> exp(-x^2)`, i.e. `eta / sqrt(2)`.
///
/// Reported next to [`rayleigh_cdf`] in the experiments because the two
/// differ by a factor `sqrt(2)` in scale.
pub fn summed_survival_limit_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x * x).exp_m1()
    }
}

/// Slope law implied by [`summed_survival_limit_cdf`]: `1 - exp(-x^2/(4c))`.
pub fn summed_slope_limit_cdf(x: f64, c: f64) -> f64 {
    summed_survival_limit_cdf(x / (2.0 * c.sqrt()))
}

/// Kolmogorov distance between the exact law of `sqrt(delta) * R` and a
/// continuous distribution function, by direct summation over the atoms
/// `k sqrt(delta)`.
pub fn scaled_returns_ks<F: Fn(f64) -> f64>(delta: f64, cdf: F) -> f64 {
    let kmax = (1.0 / (2.0 * delta)).floor() as u64;
    let survival = survival_table(kmax + 1, delta);
    let step = delta.sqrt();
    let mut d = 0.0f64;
    // On [k step, (k+1) step) the law puts mass 1 - P(R >= k+1) below x.
    for k in 0..=kmax {
        let f = 1.0 - survival[k as usize + 1];
        let lo = cdf(k as f64 * step);
        let hi = cdf((k + 1) as f64 * step);
        d = d.max((f - lo).abs()).max((f - hi).abs());
    }
    d
}

/// `E[s^tau; tau < inf] = 1 - sqrt(1 - 4 p q s^2)` for the first return time of
/// a walk with constant up-probability `p`.
pub fn return_time_transform(s: f64, p: f64) -> f64 {
    let q = 1.0 - p;
    1.0 - (1.0 - 4.0 * p * q * s * s).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Expectation {
    Finite(f64),
    Infinite,
}

impl Expectation {
    pub fn finite(self) -> Option<f64> {
        match self {
            Expectation::Finite(v) => Some(v),
            Expectation::Infinite => None,
        }
    }
}

/// `E[tau; tau < inf] = 4pq / |p - q|`. Infinite at `p = 1/2`.
pub fn expected_return_time(p: f64) -> Expectation {
    let q = 1.0 - p;
    let gap = (p - q).abs();
    if gap == 0.0 {
        Expectation::Infinite
    } else {
        Expectation::Finite(4.0 * p * q / gap)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LastReturnVariant {
    /// `2 * sum_{k <= [1/(2 delta)]} (1/(k delta) - k delta) P(T_{k-1} < inf)`.
    PaperDisplay,
    /// Per-excursion expectation `4 p_k q_k / |p_k - q_k|` weighted by `P(R >= k-1)`.
    #[default]
    ExcursionDerived,
}

/// Expected time of the last visit to 0.
pub fn expected_last_return(delta: f64, variant: LastReturnVariant) -> f64 {
    let kmax = (1.0 / (2.0 * delta)).floor() as u64;
    let survival = survival_table(kmax, delta);
    match variant {
        LastReturnVariant::PaperDisplay => (1..=kmax)
            .map(|k| {
                let kd = k as f64 * delta;
                2.0 * (1.0 / kd - kd) * survival[k as usize - 1]
            })
            .sum(),
        LastReturnVariant::ExcursionDerived => (1..=kmax)
            .map(|k| {
                let p = (0.5 + k as f64 * delta).min(1.0);
                if p >= 1.0 {
                    return 0.0;
                }
                let term = expected_return_time(p).finite().unwrap_or(0.0);
                term * survival[k as usize - 1]
            })
            .sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn survival_examples() {
        assert_eq!(returns_survival(0, 0.1), 1.0);
        assert_abs_diff_eq!(returns_survival(1, 0.25), 0.5);
        assert_eq!(returns_survival(2, 0.25), 0.0);
        assert_abs_diff_eq!(returns_survival(3, 0.05), 0.504, epsilon = 1e-15);
    }

    #[test]
    fn log_space_agrees_with_direct_product() {
        let d = 5e-5;
        let direct: f64 = (1..=300).map(|i| 1.0 - 2.0 * i as f64 * d).product();
        assert_abs_diff_eq!(returns_survival(300, d), direct, epsilon = 1e-13);
    }

    #[test]
    fn survival_vanishes_past_half_inverse_delta() {
        let d: f64 = 0.03;
        let kstar = (1.0 / (2.0 * d)).floor() as u64;
        for k in kstar + 1..kstar + 10 {
            assert_eq!(returns_survival(k, d), 0.0);
        }
    }

    #[test]
    fn rayleigh_examples() {
        assert_eq!(rayleigh_cdf(0.0), 0.0);
        assert_eq!(rayleigh_cdf(-1.0), 0.0);
        let median = (2.0 * 2f64.ln()).sqrt();
        assert_abs_diff_eq!(median, 1.177410, epsilon = 1e-6);
        assert_abs_diff_eq!(rayleigh_cdf(median), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rayleigh_cdf(40.0), 1.0);
    }

    #[test]
    fn slope_examples() {
        assert_eq!(slope_limit_cdf(0.0, 1.0), 0.0);
        let x = 2.0 * (2.0 * 2f64.ln()).sqrt();
        assert_abs_diff_eq!(x, 2.354821, epsilon = 1e-6);
        assert_abs_diff_eq!(slope_limit_cdf(x, 1.0), 0.5, epsilon = 1e-15);
        let m = (2.0 * 2f64.ln()).sqrt();
        assert_abs_diff_eq!(slope_limit_cdf(m, 0.25), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn summed_limit_is_rescaled_rayleigh() {
        for x in [0.1, 0.5, 1.0, 2.0] {
            assert_abs_diff_eq!(
                summed_survival_limit_cdf(x),
                rayleigh_cdf(x * 2f64.sqrt()),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn scaled_returns_ks_values() {
        // Reference values from an independent summation.
        let d = scaled_returns_ks(1e-6, rayleigh_cdf);
        assert!((d - 0.2512).abs() < 1e-3, "{d}");
        let d = scaled_returns_ks(1e-6, summed_survival_limit_cdf);
        assert!(d < 2e-3, "{d}");
        // Delta = 1/2: R = 0 surely, so the distance to a point mass at 0 is 0.
        assert_eq!(scaled_returns_ks(0.5, |x| if x >= 0.0 { 1.0 } else { 0.0 }), 0.0);
    }

    #[test]
    fn transform_examples() {
        assert_eq!(return_time_transform(0.0, 0.3), 0.0);
        assert_abs_diff_eq!(return_time_transform(1.0, 0.5), 1.0);
        assert_abs_diff_eq!(return_time_transform(1.0, 0.6), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn transform_at_one_is_return_probability() {
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            assert_abs_diff_eq!(
                return_time_transform(1.0, p),
                1.0 - (2.0 * p - 1.0).abs(),
                epsilon = 1e-7
            );
        }
    }

    #[test]
    fn transform_derivative_matches_expected_return_time() {
        let h = 1e-5;
        for p in [0.55, 0.6, 0.75] {
            // The transform is smooth through s = 1 for p != 1/2, so a
            // central difference at s = 1 is the left derivative.
            let d = (return_time_transform(1.0 + h, p) - return_time_transform(1.0 - h, p)) / (2.0 * h);
            let e = expected_return_time(p).finite().unwrap();
            assert!((d - e).abs() < 1e-3, "p {p}: fd {d} vs {e}");
        }
    }

    #[test]
    fn expected_return_time_examples() {
        assert_abs_diff_eq!(expected_return_time(0.6).finite().unwrap(), 4.8, epsilon = 1e-12);
        assert_eq!(expected_return_time(1.0), Expectation::Finite(0.0));
        assert_eq!(expected_return_time(0.5), Expectation::Infinite);
    }

    #[test]
    fn expected_last_return_examples() {
        assert_abs_diff_eq!(
            expected_last_return(0.25, LastReturnVariant::ExcursionDerived),
            1.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            expected_last_return(0.25, LastReturnVariant::PaperDisplay),
            9.0,
            epsilon = 1e-12
        );
        assert_eq!(expected_last_return(0.5, LastReturnVariant::ExcursionDerived), 0.0);
    }

    #[test]
    fn excursion_variant_matches_closed_form_terms() {
        // 4 p q / |p - q| = 1/(2 k delta) - 2 k delta for p = 1/2 + k delta.
        let d = 0.05;
        let direct: f64 = (1..=9)
            .map(|k| {
                let kd = k as f64 * d;
                (1.0 / (2.0 * kd) - 2.0 * kd) * returns_survival(k - 1, d)
            })
            .sum();
        assert_abs_diff_eq!(
            expected_last_return(d, LastReturnVariant::ExcursionDerived),
            direct,
            epsilon = 1e-12
        );
    }

    proptest! {
        #[test]
        fn survival_is_nonincreasing_with_ratio(delta in 1e-6f64..0.5, k in 1u64..2000) {
            let a = returns_survival(k - 1, delta);
            let b = returns_survival(k, delta);
            prop_assert!(b <= a);
            let f = 1.0 - 2.0 * k as f64 * delta;
            if f <= 0.0 {
                prop_assert_eq!(b, 0.0);
            } else if a > 1e-250 {
                prop_assert!((b / a - f).abs() < 1e-9);
            }
        }
    }
}

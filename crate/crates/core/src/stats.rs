//! Empirical distribution functions, Kolmogorov-Smirnov tests and
//! normal-approximation confidence intervals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RwmError};
use crate::grid::GridPath;
use crate::mc::standard_normal_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n_effective: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub label: String,
    pub sample_size: usize,
    pub mean: f64,
    pub ci_half_width: f64,
    pub level: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl SummaryRecord {
    pub fn standard_error(&self) -> f64 {
        self.ci_half_width / z_two_sided(self.level)
    }

    pub fn contains(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.ci_half_width
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Fraction of samples `<= x`.
pub fn ecdf_eval(samples: &[f64], x: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(RwmError::EmptySample);
    }
    let count = samples.iter().filter(|&&s| s <= x).count();
    Ok(count as f64 / samples.len() as f64)
}

/// Points `(x, ECDF(x))` at every distinct sample value, for plot export.
pub fn ecdf_points(samples: &[f64]) -> Vec<(f64, f64)> {
    let v = sorted(samples);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = (i + 1) as f64 / n,
            _ => out.push((x, (i + 1) as f64 / n)),
        }
    }
    out
}

/// One-sample test against a continuous distribution function.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(RwmError::EmptySample);
    }
    let v = sorted(samples);
    let n = v.len() as f64;
    let statistic = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0f64, f64::max)
        .clamp(0.0, 1.0);
    Ok(KsResult {
        statistic,
        n_effective: n,
        p_value: ks_pvalue(statistic, n),
    })
}

/// Two-sample test: `sup |ECDF_a - ECDF_b|` over the merged support.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(RwmError::EmptySample);
    }
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_effective = na * nb / (na + nb);
    Ok(KsResult {
        statistic: d,
        n_effective,
        p_value: ks_pvalue(d, n_effective),
    })
}

/// Asymptotic Kolmogorov tail `Q(lambda)` at
/// `lambda = D (sqrt(n) + 0.12 + 0.11/sqrt(n))`.
pub fn ks_pvalue(d: f64, n_effective: f64) -> f64 {
    let sn = n_effective.sqrt();
    kolmogorov_tail(d * (sn + 0.12 + 0.11 / sn))
}

/// `Q(lambda) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2)`.
///
/// For small `lambda` the alternating series converges slowly, so the
/// equivalent theta-function form
/// `1 - sqrt(2 pi)/lambda sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 lambda^2))` is used.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    const TERM_TOL: f64 = 1e-10;
    if lambda <= 0.0 {
        return 1.0;
    }
    let q = if lambda < 1.0 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut sum = 0.0;
        for k in 1..=100 {
            let m = (2 * k - 1) as f64;
            let term = (-m * m * pi2 / (8.0 * lambda * lambda)).exp();
            sum += term;
            if term < TERM_TOL {
                break;
            }
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < TERM_TOL {
                break;
            }
        }
        2.0 * sum
    };
    q.clamp(0.0, 1.0)
}

/// Two-sided normal critical value `z` with `P(|Z| <= z) = level`.
pub fn z_two_sided(level: f64) -> f64 {
    standard_normal_quantile(0.5 + level / 2.0)
}

pub fn mean_ci(label: &str, samples: &[f64], level: f64) -> Result<SummaryRecord> {
    if samples.len() < 2 {
        return Err(RwmError::TooFewSamples {
            required: 2,
            got: samples.len(),
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(RwmError::invalid("level", "must lie in (0, 1)"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(SummaryRecord {
        label: label.to_string(),
        sample_size: samples.len(),
        mean,
        ci_half_width: z_two_sided(level) * (var / n).sqrt(),
        level,
        extra: BTreeMap::new(),
    })
}

/// Uniform distance between two paths on the same grid.
pub fn path_sup_distance(a: &GridPath, b: &GridPath) -> Result<f64> {
    if a.grid != b.grid || a.values.len() != b.values.len() {
        return Err(RwmError::GridMismatch);
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

pub fn median(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(RwmError::EmptySample);
    }
    let v = sorted(samples);
    let m = v.len() / 2;
    Ok(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

//! Small statistics helpers for the Monte Carlo reports.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::limit_law::{normal_cdf, normal_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub stderr: f64,
}

/// Least-squares slope of `log(error)` on `log(n)` and its standard error.
pub fn fit_rate(ns: &[usize], errors: &[f64]) -> Result<RateFit> {
    if ns.len() != errors.len() {
        return Err(Error::DimensionMismatch {
            expected: ns.len(),
            got: errors.len(),
        });
    }
    if ns.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: ns.len(),
        });
    }
    if errors.iter().any(|&e| !(e > 0.0) || !e.is_finite()) || ns.contains(&0) {
        return Err(Error::DegenerateInput);
    }
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateInput);
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| {
            let r = b - my - slope * (a - mx);
            r * r
        })
        .sum();
    Ok(RateFit {
        slope,
        stderr: (ssr / (k - 2.0) / sxx).sqrt(),
    })
}

/// Kolmogorov distance between the empirical CDF of `sample` and `N(0, 1)`.
pub fn ks_distance(sample: &[f64]) -> Result<f64> {
    if sample.len() < 10 {
        return Err(Error::TooFewSamples {
            needed: 10,
            got: sample.len(),
        });
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (k, &v) in s.iter().enumerate() {
        let c = normal_cdf(v);
        d = d.max((k as f64 + 1.0) / n - c).max(c - k as f64 / n);
    }
    Ok(d.clamp(0.0, 1.0))
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance; zero below two values.
pub fn sample_variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    if k % 2 == 1 {
        s[k / 2]
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2])
    }
}

/// `(normal quantile at (k − ½)/N, k-th order statistic)` pairs.
pub fn qq_points(sample: &[f64]) -> Vec<(f64, f64)> {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.into_iter()
        .enumerate()
        .map(|(k, v)| (normal_quantile((k as f64 + 0.5) / n), v))
        .collect()
}

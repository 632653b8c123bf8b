//! Descriptive statistics for score distributions.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Summary of a sample. Skewness and excess kurtosis are `None` when the
/// sample has zero variance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DistributionStats {
    pub n: usize,
    pub mean: f64,
    /// Sample variance, `1/(n−1)`.
    pub variance: f64,
    /// Population-standardized third moment.
    pub skewness: Option<f64>,
    /// Population-standardized fourth moment minus 3 (normal = 0).
    pub excess_kurtosis: Option<f64>,
    pub min: f64,
    pub max: f64,
}

impl DistributionStats {
    pub fn is_leptokurtic(&self) -> bool {
        self.excess_kurtosis.is_some_and(|k| k > 0.0)
    }
}

/// Single-pass central moments (Welford/Terriberry update).
pub fn moments_stats(values: &[f64]) -> Result<DistributionStats> {
    if values.len() < 2 {
        return Err(Error::Undefined(alloc::format!(
            "need at least 2 values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("values contain non-finite entries".into()));
    }
    let (mut mean, mut m2, mut m3, mut m4) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, &x) in values.iter().enumerate() {
        let n1 = k as f64;
        let n = n1 + 1.0;
        let delta = x - mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        mean += delta_n;
        m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * m2 - 4.0 * delta_n * m3;
        m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * m2;
        m2 += term1;
        min = min.min(x);
        max = max.max(x);
    }
    let n = values.len() as f64;
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (
            Some(libm::sqrt(n) * m3 / libm::pow(m2, 1.5)),
            Some(n * m4 / (m2 * m2) - 3.0),
        )
    } else {
        (None, None)
    };
    Ok(DistributionStats {
        n: values.len(),
        mean,
        variance: m2 / (n - 1.0),
        skewness,
        excess_kurtosis,
        min,
        max,
    })
}

/// Uniform bins over `[min, max]`; each bin is right-open except the last.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Histogram {
    /// `bins + 1` strictly increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

/// Bins `values` into `bins` uniform bins spanning their range.
///
/// When every value is equal the edges span `[v − 1, v]`, so the whole
/// sample lands in the final (right-closed) bin.
pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if bins < 1 {
        return Err(Error::Parameter("histogram needs at least 1 bin".into()));
    }
    if values.is_empty() {
        return Err(Error::Undefined("histogram of an empty sample".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("values contain non-finite entries".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if max > min { (min, max) } else { (max - 1.0, max) };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|k| if k == bins { hi } else { lo + width * k as f64 })
        .collect();

    let mut counts = vec![0u64; bins];
    for &v in values {
        let mut idx = ((v - lo) / width) as usize;
        if idx >= bins {
            idx = bins - 1;
        }
        // keep bin membership consistent with the published edges
        while idx > 0 && v < edges[idx] {
            idx -= 1;
        }
        while idx + 1 < bins && v >= edges[idx + 1] {
            idx += 1;
        }
        counts[idx] += 1;
    }
    Ok(Histogram {
        edges,
        counts,
        underflow: 0,
        overflow: 0,
    })
}

/// Product-moment correlation, clamped to `[−1, 1]`.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Bounds {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::Undefined("correlation needs at least 2 pairs".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("values contain non-finite entries".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation with a constant input".into()));
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

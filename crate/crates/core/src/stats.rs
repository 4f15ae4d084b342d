//! Estimators and goodness-of-fit statistics for simulation output.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::combinatorics::{falling_factorial, ln_factorial};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub count: u64,
    pub histogram: BTreeMap<u64, u64>,
    pub mean: f64,
    /// Unbiased sample variance; 0 for fewer than two samples.
    pub variance: f64,
}

impl SampleSummary {
    pub fn from_samples(samples: &[u64]) -> Self {
        let mut histogram = BTreeMap::new();
        for &s in samples {
            *histogram.entry(s).or_insert(0) += 1;
        }
        Self::from_histogram(histogram)
    }

    pub fn from_histogram(histogram: BTreeMap<u64, u64>) -> Self {
        let count: u64 = histogram.values().sum();
        if count == 0 {
            return SampleSummary {
                count,
                histogram,
                mean: 0.0,
                variance: 0.0,
            };
        }
        let mean = histogram.iter().map(|(&v, &f)| v as f64 * f as f64).sum::<f64>() / count as f64;
        let variance = if count > 1 {
            histogram
                .iter()
                .map(|(&v, &f)| f as f64 * (v as f64 - mean).powi(2))
                .sum::<f64>()
                / (count - 1) as f64
        } else {
            0.0
        };
        SampleSummary {
            count,
            histogram,
            mean,
            variance,
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        (self.variance / self.count as f64).sqrt()
    }

    /// Normal-approximation interval `mean ± z * se`.
    pub fn mean_interval(&self, z: f64) -> (f64, f64) {
        let h = z * self.std_error();
        (self.mean - h, self.mean + h)
    }

    pub fn frequency(&self, value: u64) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        *self.histogram.get(&value).unwrap_or(&0) as f64 / self.count as f64
    }

    pub fn merge(&mut self, other: &SampleSummary) {
        let mut h = std::mem::take(&mut self.histogram);
        for (&v, &f) in &other.histogram {
            *h.entry(v).or_insert(0) += f;
        }
        *self = Self::from_histogram(h);
    }
}

/// `(1/count) * sum_s [s]_t`, summed exactly.
pub fn factorial_moment(samples: &[u64], t: u32) -> Result<f64> {
    Ok(factorial_moment_with_se(samples, t)?.0)
}

/// The factorial moment and the standard error of that mean.
pub fn factorial_moment_with_se(samples: &[u64], t: u32) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::Usage("factorial moment of an empty sample".into()));
    }
    if t == 0 {
        return Err(Error::Usage("factorial moment order must be at least 1".into()));
    }
    let mut sum = BigUint::from(0u32);
    let mut values = Vec::with_capacity(samples.len());
    for &s in samples {
        let f = falling_factorial(s, t as u64);
        values.push(f.to_f64().unwrap_or(f64::INFINITY));
        sum += f;
    }
    let k = samples.len() as f64;
    let mean = sum.to_f64().unwrap_or(f64::INFINITY) / k;
    let se = if samples.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };
    Ok((mean, se))
}

pub fn poisson_pmf(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * lambda.ln() - lambda - ln_factorial(k)).exp()
}

/// Total variation distance between the empirical law and `Po(lambda)`,
/// counting the Poisson mass beyond the largest observed value.
pub fn poisson_tv_distance(summary: &SampleSummary, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("Poisson mean must be finite and >= 0, got {lambda}")));
    }
    if summary.count == 0 {
        return Err(Error::Usage("empty sample".into()));
    }
    let max = summary.histogram.keys().next_back().copied().unwrap_or(0);
    let mut dist = 0.0;
    let mut covered = 0.0;
    for k in 0..=max {
        let p = poisson_pmf(lambda, k);
        covered += p;
        dist += (summary.frequency(k) - p).abs();
    }
    dist += (1.0 - covered).max(0.0);
    Ok((dist / 2.0).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    /// Number of categories after pooling.
    pub groups: usize,
}

/// Chi-square test of `observed` against the uniform law on `categories`
/// cells (cells missing from `observed` count as zero).
///
/// When the expected count per cell `E` is below 5, consecutive cells are
/// pooled in groups of `ceil(5 / E)`; a short final group joins the one
/// before it.
pub fn chi_square_uniformity(observed: &[u64], categories: usize) -> Result<ChiSquare> {
    if observed.len() > categories {
        return Err(Error::Usage(format!(
            "{} observed cells for {categories} categories",
            observed.len()
        )));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 || categories == 0 {
        return Err(Error::Usage("no observations".into()));
    }
    let expected = total as f64 / categories as f64;
    let width = if expected >= 5.0 { 1 } else { (5.0 / expected).ceil() as usize };
    let mut groups: Vec<(u64, usize)> = Vec::new();
    let mut idx = 0;
    while idx < categories {
        let end = (idx + width).min(categories);
        let obs: u64 = (idx..end).map(|i| observed.get(i).copied().unwrap_or(0)).sum();
        groups.push((obs, end - idx));
        idx = end;
    }
    if groups.len() >= 2 && groups.last().unwrap().1 < width {
        let (o, c) = groups.pop().unwrap();
        let last = groups.last_mut().unwrap();
        last.0 += o;
        last.1 += c;
    }
    if groups.len() < 2 {
        return Err(Error::Usage(format!(
            "only {} group(s) left after pooling",
            groups.len()
        )));
    }
    let statistic: f64 = groups
        .iter()
        .map(|&(o, c)| {
            let e = expected * c as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = (groups.len() - 1) as u64;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        groups: groups.len(),
    })
}

/// Kolmogorov-Smirnov distance between a sample and the uniform law on [0, 1].
pub fn ks_uniform_distance(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = (x - i as f64 / n).abs();
            let hi = ((i + 1) as f64 / n - x).abs();
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

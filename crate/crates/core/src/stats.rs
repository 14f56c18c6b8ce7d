//! Small numerical helpers shared by the Monte Carlo estimators.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    // Normal::new(0, 1) cannot fail.
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

/// Sums `values` by recursive halving in fixed index order.
///
/// The result depends only on the slice contents, never on how the values
/// were produced, which keeps parallel estimators bit-reproducible.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// A sample mean together with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl MeanEstimate {
    /// Mean and standard error of `values` (sample variance with n-1).
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std_error: f64::NAN, samples: 0 };
        }
        let mean = pairwise_sum(values) / n as f64;
        if n == 1 {
            return Self { mean, std_error: 0.0, samples: 1 };
        }
        let squares: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let variance = pairwise_sum(&squares) / (n - 1) as f64;
        Self { mean, std_error: (variance / n as f64).sqrt(), samples: n }
    }

    /// Whether `target` lies within `k` standard errors of the mean.
    ///
    /// A zero standard error degrades to an absolute comparison at 1e-12.
    pub fn within(&self, target: f64, k: f64) -> bool {
        let gap = (self.mean - target).abs();
        gap <= k * self.std_error || gap <= 1e-12 * target.abs().max(1.0)
    }
}

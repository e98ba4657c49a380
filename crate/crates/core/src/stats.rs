//! Sample means with standard errors.

use serde::{Deserialize, Serialize};

use crate::math::sqrt;

/// Sample mean and its standard error `s / √n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Two-pass mean and unbiased variance, summed in iteration order so the
    /// result is independent of how the samples were produced.
    pub fn from_samples<I>(samples: I) -> Self
    where
        I: IntoIterator<Item = f64>,
        I::IntoIter: Clone,
    {
        let iter = samples.into_iter();
        let (n, sum) = iter.clone().fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
        if n == 0 {
            return Self { mean: f64::NAN, se: f64::NAN };
        }
        let mean = sum / n as f64;
        if n == 1 {
            return Self { mean, se: 0.0 };
        }
        let ss: f64 = iter.map(|x| (x - mean) * (x - mean)).sum();
        let var = ss / (n - 1) as f64;
        Self {
            mean,
            se: sqrt(var / n as f64),
        }
    }

    /// `(mean − target) / se`.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.se
    }

    /// `|z| ≤ k`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        self.z_score(target).abs() <= k
    }
}

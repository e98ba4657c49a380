//! Time-varying privacy noise `σ_ε(t)`, piecewise constant.
//!
//! With a deterministic schedule the impact `λ` stays constant, the Riccati
//! equation becomes `dΣ/dt = −λ² (σ_u² + σ_ε(t)²)`, and the terminal
//! condition `Σ(1) = 0` pins
//!
//! ```text
//! λ² = σ_v² / (σ_u² + ⟨σ_ε²⟩),     ⟨σ_ε²⟩ = ∫₀¹ σ_ε(t)² dt
//! ```
//!
//! so the subsidy `λ ⟨σ_ε²⟩` only sees the time average of the variance.
//! Results here are restricted to the unit horizon.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{EquilibriumPath, MarketParams};
use crate::error::{Error, Result};
use crate::math::sqrt;

const CONTIGUITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    /// `σ_ε(t)²` on `[t_start, t_end)`.
    pub variance: f64,
}

/// Sorted, contiguous segments covering `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSchedule {
    segments: Vec<Segment>,
}

impl NoiseSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidSchedule {
                segment: 0,
                reason: "no segments",
            });
        }
        let mut expected_start = 0.0;
        for (i, seg) in segments.iter().enumerate() {
            let fail = |reason| Err(Error::InvalidSchedule { segment: i, reason });
            if !(seg.t_start.is_finite() && seg.t_end.is_finite() && seg.variance.is_finite()) {
                return fail("non-finite value");
            }
            if (seg.t_start - expected_start).abs() > CONTIGUITY_TOL {
                return fail(if seg.t_start > expected_start {
                    "gap before segment"
                } else {
                    "overlaps previous segment"
                });
            }
            if seg.t_end <= seg.t_start {
                return fail("empty or reversed segment");
            }
            if seg.variance < 0.0 {
                return fail("negative variance");
            }
            expected_start = seg.t_end;
        }
        Ok(Self { segments })
    }

    /// Single segment of variance `variance` on `[0, horizon]`.
    pub fn constant(variance: f64, horizon: f64) -> Result<Self> {
        Self::new(alloc::vec![Segment {
            t_start: 0.0,
            t_end: horizon,
            variance,
        }])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// End of the last segment.
    pub fn horizon(&self) -> f64 {
        self.segments[self.segments.len() - 1].t_end
    }

    /// `(1/T) Σ (t_end − t_start) · variance`.
    pub fn mean_variance(&self) -> f64 {
        self.integrated_variance() / self.horizon()
    }

    /// `∫₀ᵀ σ_ε(t)² dt`.
    pub fn integrated_variance(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| (s.t_end - s.t_start) * s.variance)
            .sum()
    }

    /// `σ_ε(t)²`, right-continuous; the last segment extends to `t ≥ T`.
    pub fn variance_at(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| t < s.t_end)
            .unwrap_or(&self.segments[self.segments.len() - 1])
            .variance
    }

    /// `∫₀ᵗ σ_ε(s)² ds`.
    pub fn cumulative_variance(&self, t: f64) -> f64 {
        let mut total = 0.0;
        for s in &self.segments {
            if t <= s.t_start {
                break;
            }
            total += (t.min(s.t_end) - s.t_start) * s.variance;
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentRate {
    pub t_start: f64,
    pub t_end: f64,
    /// Instantaneous subsidy rate `λ σ_ε(t)²`.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleSubsidy {
    pub lambda: f64,
    pub mean_variance: f64,
    pub subsidy: f64,
    pub segment_rates: Vec<SegmentRate>,
}

fn require_unit_horizon(params: &MarketParams, schedule: &NoiseSchedule) -> Result<()> {
    params.validate()?;
    if (params.horizon - 1.0).abs() > CONTIGUITY_TOL {
        return Err(Error::HorizonMismatch {
            expected: 1.0,
            found: params.horizon,
        });
    }
    if (schedule.horizon() - 1.0).abs() > CONTIGUITY_TOL {
        return Err(Error::HorizonMismatch {
            expected: 1.0,
            found: schedule.horizon(),
        });
    }
    Ok(())
}

/// Impact, subsidy and per-segment subsidy rates under a schedule.
///
/// `params.sigma_eps` is ignored.
pub fn schedule_subsidy(params: &MarketParams, schedule: &NoiseSchedule) -> Result<ScheduleSubsidy> {
    require_unit_horizon(params, schedule)?;
    let mean_variance = schedule.mean_variance();
    let total = params.sigma_u * params.sigma_u + mean_variance;
    let lambda = params.sigma_v / sqrt(total);
    let segment_rates = schedule
        .segments()
        .iter()
        .map(|s| SegmentRate {
            t_start: s.t_start,
            t_end: s.t_end,
            rate: lambda * s.variance,
        })
        .collect();
    Ok(ScheduleSubsidy {
        lambda,
        mean_variance,
        subsidy: params.sigma_v * mean_variance / sqrt(total),
        segment_rates,
    })
}

/// Equilibrium under a time-varying noise schedule on the unit horizon.
#[derive(Debug, Clone)]
pub struct ScheduledEquilibrium {
    params: MarketParams,
    schedule: NoiseSchedule,
    lambda: f64,
}

impl ScheduledEquilibrium {
    /// `params.sigma_eps` is replaced by `√⟨σ_ε²⟩` so that `params()` stays
    /// meaningful for the constant-noise closed forms.
    pub fn new(params: &MarketParams, schedule: NoiseSchedule) -> Result<Self> {
        let solved = schedule_subsidy(params, &schedule)?;
        Ok(Self {
            params: params.with_sigma_eps(sqrt(solved.mean_variance)),
            schedule,
            lambda: solved.lambda,
        })
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    /// `Σ(T)` from integrating the Riccati segment by segment; zero up to rounding.
    pub fn terminal_variance(&self) -> f64 {
        let sigma_u2 = self.params.sigma_u * self.params.sigma_u;
        let lambda2 = self.lambda * self.lambda;
        self.schedule.segments().iter().fold(self.params.prior_variance(), |acc, s| {
            acc - lambda2 * (sigma_u2 + s.variance) * (s.t_end - s.t_start)
        })
    }
}

impl EquilibriumPath for ScheduledEquilibrium {
    fn params(&self) -> &MarketParams {
        &self.params
    }

    fn impact(&self) -> f64 {
        self.lambda
    }

    fn noise_variance(&self, t: f64) -> f64 {
        self.schedule.variance_at(t)
    }

    fn posterior_variance(&self, t: f64) -> Result<f64> {
        let horizon = self.params.horizon;
        if t.is_nan() || !(0.0..=horizon).contains(&t) {
            return Err(Error::TimeOutOfRange { t, horizon });
        }
        let sigma_u2 = self.params.sigma_u * self.params.sigma_u;
        let spent = self.lambda * self.lambda * (sigma_u2 * t + self.schedule.cumulative_variance(t));
        Ok((self.params.prior_variance() - spent).max(0.0))
    }

    /// `β(t) = λ (σ_u² + σ_ε(t)²) / Σ(t)`.
    fn trading_intensity(&self, t: f64) -> Result<f64> {
        let horizon = self.params.horizon;
        if t >= horizon {
            return Err(Error::HorizonSingularity { t, horizon });
        }
        let sigma_u2 = self.params.sigma_u * self.params.sigma_u;
        let variance = self.posterior_variance(t)?;
        Ok(self.lambda * (sigma_u2 + self.schedule.variance_at(t)) / variance)
    }
}

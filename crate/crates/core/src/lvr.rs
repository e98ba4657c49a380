//! Loss-versus-rebalancing of a constant-product AMM, and its correspondence
//! with the privacy subsidy.
//!
//! With reserves `R^x R^y = k` the pool is worth `V(q) = 2√(kq)` at reference
//! price `q`, and under `dq = μ q dt + σ q dW` it loses to arbitrageurs at rate
//!
//! ```text
//! ℓ(q) = −½ σ² q² V''(q) = (σ²/8) V(q)
//! ```

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve_equilibrium, MarketParams};
use crate::error::{non_negative, positive, Error, Result};
use crate::math::{exp, expm1, pow, sqrt};
use crate::rng::path_rng;
use crate::stats::Estimate;
use crate::welfare::welfare_closed_form;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpammParams {
    /// Constant-product invariant.
    pub k: f64,
    /// Initial reference price.
    pub q0: f64,
    /// Reference-price volatility.
    pub sigma: f64,
    /// GBM drift; zero keeps the run comparable with the rate formula.
    pub mu_drift: f64,
    pub horizon: f64,
}

impl CpammParams {
    pub fn new(k: f64, q0: f64, sigma: f64, mu_drift: f64, horizon: f64) -> Result<Self> {
        let p = Self {
            k,
            q0,
            sigma,
            mu_drift,
            horizon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("k", self.k)?;
        positive("q0", self.q0)?;
        non_negative("sigma", self.sigma)?;
        positive("horizon", self.horizon)?;
        if !self.mu_drift.is_finite() {
            return Err(Error::param("mu_drift", self.mu_drift, "finite"));
        }
        Ok(())
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }
}

/// `V(q) = 2√(kq)`.
pub fn amm_value(k: f64, q: f64) -> f64 {
    2.0 * sqrt(k * q)
}

/// `V''(q) = −√k / (2 q^{3/2})`.
pub fn amm_value_curvature(k: f64, q: f64) -> f64 {
    -sqrt(k) / (2.0 * pow(q, 1.5))
}

/// `(σ²/8) V(q)`.
pub fn lvr_rate(params: &CpammParams, q: f64) -> Result<f64> {
    positive("q", q)?;
    Ok(params.sigma * params.sigma / 8.0 * amm_value(params.k, q))
}

/// `−½ σ² q² V''(q)`, the same rate from the curvature of the pool value.
pub fn lvr_rate_from_curvature(params: &CpammParams, q: f64) -> Result<f64> {
    positive("q", q)?;
    Ok(-0.5 * params.sigma * params.sigma * q * q * amm_value_curvature(params.k, q))
}

/// `E ∫₀ᵀ ℓ(q_t) dt` under GBM, using `E√q_t = √q₀ exp((μ/2 − σ²/8) t)`.
pub fn expected_cumulative_lvr(params: &CpammParams) -> Result<f64> {
    params.validate()?;
    let rate0 = lvr_rate(params, params.q0)?;
    let a = params.mu_drift / 2.0 - params.sigma * params.sigma / 8.0;
    let integral = if a == 0.0 {
        params.horizon
    } else {
        expm1(a * params.horizon) / a
    };
    Ok(rate0 * integral)
}

/// Loss of the pool against a rebalancing portfolio over one price move.
///
/// Holding the old reserves to `q_new` is worth `R^y + q_new R^x`; the pool
/// re-centred at `q_new` is worth `V(q_new)`. The difference simplifies to
/// `√k (√q_new − √q_old)² / √q_old`, which is how it is evaluated.
pub fn rebalancing_loss(k: f64, q_old: f64, q_new: f64) -> f64 {
    let gap = sqrt(q_new) - sqrt(q_old);
    sqrt(k) * gap * gap / sqrt(q_old)
}

/// One recorded step of an LVR path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LvrStep {
    pub path_id: u64,
    pub step: usize,
    pub t: f64,
    pub q: f64,
    #[serde(rename = "V")]
    pub value: f64,
    pub lvr_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LvrPathSummary {
    /// `Σ` realized rebalancing losses.
    pub realized: f64,
    /// `Σ (σ²/8) V(q_k) Δt` at left endpoints.
    pub integral: f64,
    pub min_step: f64,
}

/// Exact GBM steps with frictionless arbitrage to each new price.
pub fn simulate_lvr_path<R>(
    params: &CpammParams,
    n_steps: usize,
    master_seed: u64,
    path_index: u64,
    mut record: R,
) -> Result<LvrPathSummary>
where
    R: FnMut(&LvrStep),
{
    params.validate()?;
    if n_steps < 1 {
        return Err(Error::param("n_steps", n_steps as f64, ">= 1"));
    }
    let dt = params.horizon / n_steps as f64;
    let vol = params.sigma * sqrt(dt);
    let drift = (params.mu_drift - 0.5 * params.sigma * params.sigma) * dt;
    let rate_factor = params.sigma * params.sigma / 8.0;
    let mut rng = path_rng(master_seed, path_index);

    let mut q = params.q0;
    let mut out = LvrPathSummary {
        realized: 0.0,
        integral: 0.0,
        min_step: f64::INFINITY,
    };
    for k in 0..n_steps {
        let z: f64 = StandardNormal.sample(&mut rng);
        let q_new = q * exp(drift + vol * z);
        if !(q_new.is_finite() && q_new > 0.0) {
            return Err(Error::NonFinite {
                path: path_index,
                step: k,
                quantity: "reference price",
            });
        }
        out.integral += rate_factor * amm_value(params.k, q) * dt;
        let loss = rebalancing_loss(params.k, q, q_new);
        out.realized += loss;
        out.min_step = out.min_step.min(loss);
        q = q_new;
        record(&LvrStep {
            path_id: path_index,
            step: k,
            t: (k + 1) as f64 * dt,
            q,
            value: amm_value(params.k, q),
            lvr_step: loss,
        });
    }
    if !out.realized.is_finite() {
        return Err(Error::NonFinite {
            path: path_index,
            step: n_steps,
            quantity: "cumulative LVR",
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LvrResult {
    /// Realized rebalancing loss.
    pub mc_lvr: Estimate,
    /// Path-wise integral of the rate formula.
    pub closed_form_integral: Estimate,
    /// Expectation of the integral, in closed form.
    pub expected: f64,
    /// `|mc − integral| / integral`, on the means.
    pub relative_gap: f64,
    pub min_step_lvr: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub master_seed: u64,
    /// False when `mu_drift != 0`, outside the rate comparison.
    pub drift_free: bool,
}

impl LvrResult {
    pub fn from_paths(
        params: &CpammParams,
        n_steps: usize,
        master_seed: u64,
        paths: &[LvrPathSummary],
    ) -> Result<Self> {
        let mc_lvr = Estimate::from_samples(paths.iter().map(|p| p.realized));
        let closed_form_integral = Estimate::from_samples(paths.iter().map(|p| p.integral));
        let relative_gap = if closed_form_integral.mean == 0.0 {
            mc_lvr.mean.abs()
        } else {
            ((mc_lvr.mean - closed_form_integral.mean) / closed_form_integral.mean).abs()
        };
        Ok(Self {
            mc_lvr,
            closed_form_integral,
            expected: expected_cumulative_lvr(params)?,
            relative_gap,
            min_step_lvr: paths.iter().map(|p| p.min_step).fold(f64::INFINITY, f64::min),
            n_steps,
            n_paths: paths.len(),
            master_seed,
            drift_free: params.mu_drift == 0.0,
        })
    }
}

/// Serial driver.
pub fn simulate_lvr(
    params: &CpammParams,
    n_steps: usize,
    n_paths: usize,
    master_seed: u64,
) -> Result<LvrResult> {
    if n_paths < 1 {
        return Err(Error::param("n_paths", n_paths as f64, ">= 1"));
    }
    let paths = (0..n_paths as u64)
        .map(|i| simulate_lvr_path(params, n_steps, master_seed, i, |_| {}))
        .collect::<Result<Vec<_>>>()?;
    LvrResult::from_paths(params, n_steps, master_seed, &paths)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptRow {
    pub concept: String,
    pub lvr: String,
    pub privacy: String,
}

/// A rate written as `noise_driver² × committed_factor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    pub noise_intensity_sq: f64,
    pub committed_factor: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseRegime {
    /// `σ_ε ≤ σ_u`: rate ≈ `σ_v σ_ε² / σ_u`, quadratic in the driver.
    SmallNoise,
    /// `σ_ε > σ_u`: rate ≈ `σ_v σ_ε`, linear in the driver.
    LargeNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceTable {
    pub rows: Vec<ConceptRow>,
    /// LVR rate at `q0`.
    pub lvr: Factorization,
    pub privacy: Factorization,
    pub small_noise_approx: f64,
    pub large_noise_approx: f64,
    pub regime: NoiseRegime,
    pub cumulative_lvr_expected: f64,
    pub cumulative_privacy_subsidy: f64,
    pub lvr_solvency: String,
    pub privacy_solvency: String,
    pub note: String,
}

/// Side-by-side view of the two committed-pricing welfare rates.
pub fn correspondence_report(market: &MarketParams, amm: &CpammParams) -> Result<CorrespondenceTable> {
    let eq = solve_equilibrium(market)?;
    let subsidy = welfare_closed_form(market)?.subsidy;
    let lvr_rate0 = lvr_rate(amm, amm.q0)?;
    let sigma_eps2 = market.sigma_eps * market.sigma_eps;
    let cumulative_lvr_expected = expected_cumulative_lvr(amm)?;

    let row = |concept: &str, lvr: &str, privacy: &str| ConceptRow {
        concept: concept.into(),
        lvr: lvr.into(),
        privacy: privacy.into(),
    };
    let rows = vec![
        row("Committed object", "AMM curve V(q)", "Pricing rule lambda"),
        row("Observation channel", "External price q_t", "Noisy order flow dy~_t"),
        row("Noise driver", "Reference-price Brownian motion", "Privacy-noise Brownian motion W^eps"),
        row("Counterparty", "Arbitrageur", "Informed insider"),
        row(
            "Welfare rate",
            "(sigma^2/8) V(q_t)",
            "sigma_v sigma_eps^2 / sqrt(sigma_u^2 + sigma_eps^2)",
        ),
        row("Solvency criterion", "int fee >= int l_LVR", "int fee >= int l_priv"),
    ];

    Ok(CorrespondenceTable {
        rows,
        lvr: Factorization {
            noise_intensity_sq: amm.sigma * amm.sigma,
            committed_factor: amm_value(amm.k, amm.q0) / 8.0,
            rate: lvr_rate0,
        },
        privacy: Factorization {
            noise_intensity_sq: sigma_eps2,
            committed_factor: eq.lambda,
            rate: eq.lambda * sigma_eps2,
        },
        small_noise_approx: market.sigma_v * sigma_eps2 / market.sigma_u,
        large_noise_approx: market.sigma_v * market.sigma_eps,
        regime: if market.sigma_eps <= market.sigma_u {
            NoiseRegime::SmallNoise
        } else {
            NoiseRegime::LargeNoise
        },
        cumulative_lvr_expected,
        cumulative_privacy_subsidy: subsidy,
        lvr_solvency: format!("fee income >= {cumulative_lvr_expected} (expected cumulative LVR)"),
        privacy_solvency: format!("fee income >= {subsidy} (cumulative privacy subsidy)"),
        note: "The two rates belong to different markets and share a form, not units; \
               compare their structure, not their magnitudes."
            .into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amm(k: f64, sigma: f64) -> CpammParams {
        CpammParams::new(k, 1.0, sigma, 0.0, 1.0).unwrap()
    }

    #[test]
    fn rate_examples() {
        assert!((lvr_rate(&amm(10_000.0, 0.2), 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((lvr_rate(&amm(100.0, 0.5), 4.0).unwrap() - 1.25).abs() < 1e-12);
        assert_eq!(lvr_rate(&amm(100.0, 0.0), 3.0).unwrap(), 0.0);
        assert!(lvr_rate(&amm(100.0, 0.5), 0.0).is_err());
    }

    #[test]
    fn rebalancing_loss_matches_portfolio_difference() {
        let k = 10_000.0f64;
        for (q_old, q_new) in [(1.0, 1.1), (2.0, 1.7), (0.3, 0.31)] {
            let rx = (k / q_old).sqrt();
            let ry = (k * q_old).sqrt();
            let direct = ry + q_new * rx - amm_value(k, q_new);
            assert!((rebalancing_loss(k, q_old, q_new) - direct).abs() < 1e-10);
        }
        assert_eq!(rebalancing_loss(k, 1.3, 1.3), 0.0);
    }

    #[test]
    fn zero_volatility_gives_zero_everywhere() {
        let r = simulate_lvr(&amm(10_000.0, 0.0), 100, 5, 1).unwrap();
        assert_eq!(r.mc_lvr.mean, 0.0);
        assert_eq!(r.closed_form_integral.mean, 0.0);
        assert_eq!(r.expected, 0.0);
    }

    #[test]
    fn expected_cumulative_closed_form() {
        let p = amm(10_000.0, 0.2);
        let expected = 200.0 * (1.0 - (-0.005f64).exp());
        assert!((expected_cumulative_lvr(&p).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn table_mirrors_concepts() {
        let market = MarketParams::unit(1.0, 1.0, 0.1).unwrap();
        let t = correspondence_report(&market, &amm(10_000.0, 0.2)).unwrap();
        let concepts: Vec<&str> = t.rows.iter().map(|r| r.concept.as_str()).collect();
        assert_eq!(
            concepts,
            [
                "Committed object",
                "Observation channel",
                "Noise driver",
                "Counterparty",
                "Welfare rate",
                "Solvency criterion"
            ]
        );
        assert!((t.privacy.rate - 0.0099504).abs() < 1e-7);
        assert!((t.small_noise_approx - 0.01).abs() < 1e-15);
        assert_eq!(t.regime, NoiseRegime::SmallNoise);

        let market = MarketParams::unit(1.0, 1.0, 100.0).unwrap();
        let t = correspondence_report(&market, &amm(10_000.0, 0.2)).unwrap();
        assert!((t.privacy.rate - 99.995).abs() < 1e-3);
        assert_eq!(t.large_noise_approx, 100.0);
        assert_eq!(t.regime, NoiseRegime::LargeNoise);
    }
}

//! Discrete-block deployment of the privacy channel.
//!
//! A deployment splits the unit horizon into `N` blocks and adds Gaussian
//! noise of variance `σ_ε²/N` to each block's net flow. Each block is then a
//! Gaussian mechanism with sensitivity `Δ`:
//!
//! ```text
//! σ_block = Δ √(2 ln(1.25/δ)) / ε_block
//! ```
//!
//! Per-block budgets compose into a joint `(ε, δ)` budget either linearly
//! (basic) or via the advanced composition theorem
//! `ε' = ε √(2N ln(1/δ')) + N ε (e^ε − 1)`, with `δ' = δ_block`.
//!
//! The break-even proportional fee is `f = |Π_M| / Q`, with `Q` the expected
//! settled volume of the deployment.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve_equilibrium, MarketParams};
use crate::error::{non_negative, positive, Error, Result};
use crate::math::{expm1, ln, sqrt};
use crate::sim::{ComparisonRow, SimResult};
use crate::stats::Estimate;
use crate::welfare::welfare_closed_form;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Composition {
    Basic,
    Advanced,
}

fn check_delta(field: &'static str, delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::param(field, delta, "in (0, 1)"))
    }
}

/// `Δ √(2 ln(1.25/δ))`, the noise std that buys `ε = 1`.
fn mechanism_scale(delta: f64, sensitivity: f64) -> f64 {
    sensitivity * sqrt(2.0 * ln(1.25 / delta))
}

/// Noise standard deviation of the Gaussian mechanism at `(ε, δ)`.
pub fn gaussian_mechanism_sigma(epsilon_block: f64, delta: f64, sensitivity: f64) -> Result<f64> {
    positive("epsilon_block", epsilon_block)?;
    check_delta("delta", delta)?;
    positive("sensitivity", sensitivity)?;
    Ok(mechanism_scale(delta, sensitivity) / epsilon_block)
}

/// Inverse of [`gaussian_mechanism_sigma`] in `ε`.
pub fn gaussian_mechanism_epsilon(sigma_block: f64, delta: f64, sensitivity: f64) -> Result<f64> {
    positive("sigma_block", sigma_block)?;
    check_delta("delta", delta)?;
    positive("sensitivity", sensitivity)?;
    Ok(mechanism_scale(delta, sensitivity) / sigma_block)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeploymentPlan {
    pub n_blocks: usize,
    /// `σ_ε² / N`.
    pub per_block_noise_var: f64,
    pub sensitivity: f64,
}

impl DeploymentPlan {
    pub fn new(n_blocks: usize, per_block_noise_var: f64, sensitivity: f64) -> Result<Self> {
        if n_blocks < 1 {
            return Err(Error::param("n_blocks", n_blocks as f64, ">= 1"));
        }
        non_negative("per_block_noise_var", per_block_noise_var)?;
        positive("sensitivity", sensitivity)?;
        Ok(Self {
            n_blocks,
            per_block_noise_var,
            sensitivity,
        })
    }

    /// Plan that realizes model intensity `sigma_eps` over the unit horizon.
    pub fn from_sigma_eps(sigma_eps: f64, n_blocks: usize, sensitivity: f64) -> Result<Self> {
        non_negative("sigma_eps", sigma_eps)?;
        Self::new(n_blocks, sigma_eps * sigma_eps / n_blocks as f64, sensitivity)
    }

    pub fn sigma_block(&self) -> f64 {
        sqrt(self.per_block_noise_var)
    }

    /// `√(N · per_block_noise_var)`.
    pub fn implied_sigma_eps(&self) -> f64 {
        sqrt(self.n_blocks as f64 * self.per_block_noise_var)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpBudget {
    pub epsilon_block: f64,
    pub delta_block: f64,
    pub epsilon_joint: f64,
    pub delta_joint: f64,
    pub composition: Composition,
}

/// Joint budget spent by `plan` when each block runs at `delta_block`.
pub fn dp_forward(plan: &DeploymentPlan, delta_block: f64, composition: Composition) -> Result<DpBudget> {
    if plan.per_block_noise_var.is_nan() || plan.per_block_noise_var <= 0.0 {
        return Err(Error::param(
            "per_block_noise_var",
            plan.per_block_noise_var,
            "> 0 (zero noise gives no finite privacy budget)",
        ));
    }
    let epsilon_block = gaussian_mechanism_epsilon(plan.sigma_block(), delta_block, plan.sensitivity)?;
    let n = plan.n_blocks as f64;
    let (epsilon_joint, delta_joint) = match composition {
        Composition::Basic => (n * epsilon_block, n * delta_block),
        Composition::Advanced => {
            let slack = delta_block;
            let eps = epsilon_block * sqrt(2.0 * n * ln(1.0 / slack))
                + n * epsilon_block * expm1(epsilon_block);
            (eps, n * delta_block + slack)
        }
    };
    if delta_joint.is_nan() || delta_joint >= 1.0 {
        return Err(Error::param("delta_joint", delta_joint, "< 1"));
    }
    Ok(DpBudget {
        epsilon_block,
        delta_block,
        epsilon_joint,
        delta_joint,
        composition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockCalibration {
    pub epsilon_block: f64,
    pub delta_block: f64,
    pub sigma_block: f64,
    /// `√N σ_block`, the model intensity the deployment realizes.
    pub implied_sigma_eps: f64,
    pub n_blocks: usize,
    pub composition: Composition,
}

/// Splits a joint budget over `n_blocks` and calibrates the per-block noise.
///
/// Basic: `ε_block = ε/N`, `δ_block = δ/N`. Advanced: `ε_block = ε/√N`,
/// `δ_block = δ/(2N)`, half of `δ` being kept for the composition slack.
pub fn dp_inverse(
    epsilon_joint: f64,
    delta_joint: f64,
    n_blocks: usize,
    sensitivity: f64,
    composition: Composition,
) -> Result<BlockCalibration> {
    positive("epsilon_joint", epsilon_joint)?;
    check_delta("delta_joint", delta_joint)?;
    if n_blocks < 1 {
        return Err(Error::param("n_blocks", n_blocks as f64, ">= 1"));
    }
    let n = n_blocks as f64;
    let (epsilon_block, delta_block) = match composition {
        Composition::Basic => (epsilon_joint / n, delta_joint / n),
        Composition::Advanced => (epsilon_joint / sqrt(n), delta_joint / (2.0 * n)),
    };
    check_delta("delta_block", delta_block)?;
    let sigma_block = gaussian_mechanism_sigma(epsilon_block, delta_block, sensitivity)?;
    Ok(BlockCalibration {
        epsilon_block,
        delta_block,
        sigma_block,
        implied_sigma_eps: sqrt(n) * sigma_block,
        n_blocks,
        composition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeMode {
    /// Supplied by the caller.
    Given,
    /// Gaussian approximation of `E Σ|Δx + Δu|` on the block grid.
    Analytic,
    /// Monte Carlo estimate.
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeeReport {
    pub subsidy: f64,
    pub volume_q: f64,
    /// Standard error of `volume_q`; zero unless estimated by Monte Carlo.
    pub volume_se: f64,
    pub break_even_fee: f64,
    pub volume_mode: VolumeMode,
}

/// `f = |Π_M| / Q`.
pub fn break_even_fee(params: &MarketParams, volume_q: f64) -> Result<FeeReport> {
    break_even_fee_with(params, volume_q, 0.0, VolumeMode::Given)
}

pub fn break_even_fee_with(
    params: &MarketParams,
    volume_q: f64,
    volume_se: f64,
    volume_mode: VolumeMode,
) -> Result<FeeReport> {
    positive("volume_q", volume_q)?;
    let subsidy = welfare_closed_form(params)?.subsidy;
    Ok(FeeReport {
        subsidy,
        volume_q,
        volume_se,
        break_even_fee: subsidy / volume_q,
        volume_mode,
    })
}

/// Expected settled volume of an `n_blocks` deployment.
///
/// Each block's real flow is `Δx + Δu` with `Δu ~ N(0, σ_u² Δt)` and
/// `Δx = β(t_k)(v − p_k)Δt`; taking `v − p_k ~ N(0, Σ(t_k))` makes the flow
/// centred Gaussian, so `E|Δx + Δu| = √(2/π) · sd`.
pub fn analytic_volume(params: &MarketParams, n_blocks: usize) -> Result<f64> {
    if n_blocks < 1 {
        return Err(Error::param("n_blocks", n_blocks as f64, ">= 1"));
    }
    let eq = solve_equilibrium(params)?;
    let dt = params.horizon / n_blocks as f64;
    let noise = params.sigma_u * params.sigma_u * dt;
    let scale = sqrt(2.0 / core::f64::consts::PI);
    let mut total = 0.0;
    for k in 0..n_blocks {
        let t = k as f64 * dt;
        let beta = eq.trading_intensity(t)?;
        let insider = beta * beta * dt * dt * eq.posterior_variance(t)?;
        total += scale * sqrt(noise + insider);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetOfFeeReport {
    pub fee: f64,
    pub charge_insider: Estimate,
    pub charge_noise: Estimate,
    /// Charge targets `ΔΠ_I` and `ΔΠ_N` the fee is supposed to recoup.
    pub expected_charge_insider: f64,
    pub expected_charge_noise: f64,
    /// Net profits against `σ_v σ_u √T`, `−σ_v σ_u √T` and `0`.
    pub net: Vec<ComparisonRow>,
    /// Charges against `ΔΠ_I` and `ΔΠ_N`.
    pub charges: Vec<ComparisonRow>,
    pub flags: Vec<String>,
}

impl NetOfFeeReport {
    pub fn row(&self, quantity: &str) -> Option<&ComparisonRow> {
        self.net.iter().chain(&self.charges).find(|r| r.quantity == quantity)
    }
}

/// Charges `fee` per unit of settled volume on every path of `sim` and
/// compares net profits with the no-privacy benchmark.
///
/// Each step's charge is split between the insider and noise traders in
/// proportion to their absolute flows.
pub fn net_of_fee_report(params: &MarketParams, sim: &SimResult, fee: f64) -> Result<NetOfFeeReport> {
    non_negative("fee", fee)?;
    if sim.paths.len() < 2 {
        return Err(Error::InsufficientPaths {
            n_paths: sim.paths.len(),
            required: 2,
        });
    }
    let w = welfare_closed_form(params)?;
    let benchmark = params.sigma_v * params.sigma_u * sqrt(params.horizon);
    let paths = &sim.paths;
    let est = |f: &dyn Fn(&crate::sim::PathSummary) -> f64| Estimate::from_samples(paths.iter().map(f));

    let charge_insider = est(&|s| fee * s.insider_volume);
    let charge_noise = est(&|s| fee * s.noise_volume);
    let net = alloc::vec![
        ComparisonRow::new("net_pi_I", benchmark, est(&|s| s.profit_i - fee * s.insider_volume)),
        ComparisonRow::new("net_pi_N", -benchmark, est(&|s| s.profit_n - fee * s.noise_volume)),
        ComparisonRow::new("mm_net", 0.0, est(&|s| s.profit_m + fee * s.volume)),
    ];
    let charges = alloc::vec![
        ComparisonRow::new("charge_I", w.delta_pi_i, charge_insider),
        ComparisonRow::new("charge_N", w.delta_pi_n, charge_noise),
    ];
    let flags = net
        .iter()
        .chain(&charges)
        .filter(|r| r.flagged)
        .map(|r| String::from(r.quantity))
        .collect();
    Ok(NetOfFeeReport {
        fee,
        charge_insider,
        charge_noise,
        expected_charge_insider: w.delta_pi_i,
        expected_charge_noise: w.delta_pi_n,
        net,
        charges,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_mechanism_examples() {
        assert!((gaussian_mechanism_sigma(1.0, 1e-5, 1.0).unwrap() - 4.8448).abs() < 1e-4);
        assert!((gaussian_mechanism_sigma(4.8448, 1e-5, 1.0).unwrap() - 1.0).abs() < 1e-4);
        assert!((gaussian_mechanism_sigma(1.0, 1e-5, 2.0).unwrap() - 9.6896).abs() < 2e-4);
        assert!(gaussian_mechanism_sigma(0.0, 1e-5, 1.0).is_err());
        assert!(gaussian_mechanism_sigma(1.0, 1.0, 1.0).is_err());
        assert!(gaussian_mechanism_sigma(1.0, 1e-5, 0.0).is_err());
    }

    #[test]
    fn inverse_examples() {
        let cal = dp_inverse(10.0, 1e-5, 100, 1.0, Composition::Basic).unwrap();
        assert!((cal.epsilon_block - 0.1).abs() < 1e-15);
        assert!((cal.sigma_block - 57.168591).abs() < 1e-5);
        assert!((cal.implied_sigma_eps - 571.68591).abs() < 1e-4);

        let cal = dp_inverse(10.0, 1e-5, 1, 1.0, Composition::Basic).unwrap();
        assert_eq!(cal.epsilon_block, 10.0);
        assert!((cal.sigma_block - 0.48448).abs() < 1e-5);
    }

    #[test]
    fn more_blocks_need_more_noise() {
        for composition in [Composition::Basic, Composition::Advanced] {
            let mut prev = 0.0;
            for n in [1, 4, 16, 64, 256] {
                let cal = dp_inverse(10.0, 1e-5, n, 1.0, composition).unwrap();
                assert!(cal.implied_sigma_eps > prev);
                prev = cal.implied_sigma_eps;
            }
        }
    }

    #[test]
    fn forward_examples() {
        let plan = DeploymentPlan::new(1, 4.8448 * 4.8448, 1.0).unwrap();
        let b = dp_forward(&plan, 1e-5, Composition::Basic).unwrap();
        assert!((b.epsilon_joint - 1.0).abs() < 1e-4);

        let plan = DeploymentPlan::new(100, 4.8448 * 4.8448, 1.0).unwrap();
        let basic = dp_forward(&plan, 1e-5, Composition::Basic).unwrap();
        assert!((basic.epsilon_joint - 100.0).abs() < 1e-2);
        assert!((basic.delta_joint - 1e-3).abs() < 1e-15);

        let adv = dp_forward(&plan, 1e-5, Composition::Advanced).unwrap();
        let e = adv.epsilon_block;
        let expected = e * (200.0 * (1e5f64).ln()).sqrt() + 100.0 * e * (e.exp() - 1.0);
        assert!((adv.epsilon_joint - expected).abs() < 1e-9);
        assert!((adv.delta_joint - 101e-5).abs() < 1e-15);
    }

    #[test]
    fn advanced_beats_basic_for_small_block_budgets() {
        // ε_block ≈ 0.01 per block
        let sigma = 4.8448 / 0.01;
        for n in [10_000usize, 40_000, 160_000] {
            let plan = DeploymentPlan::new(n, sigma * sigma, 1.0).unwrap();
            let basic = dp_forward(&plan, 1e-9, Composition::Basic).unwrap();
            let adv = dp_forward(&plan, 1e-9, Composition::Advanced).unwrap();
            assert!(adv.epsilon_joint < basic.epsilon_joint);
        }
    }

    #[test]
    fn forward_rejects_zero_noise_and_excess_delta() {
        let plan = DeploymentPlan::new(10, 0.0, 1.0).unwrap();
        assert!(dp_forward(&plan, 1e-5, Composition::Basic).is_err());
        let plan = DeploymentPlan::new(1000, 1.0, 1.0).unwrap();
        assert!(dp_forward(&plan, 1e-2, Composition::Basic).is_err());
    }

    #[test]
    fn fee_examples() {
        let params = MarketParams::unit(1.0, 1.0, 1.0).unwrap();
        let r = break_even_fee(&params, 10.0).unwrap();
        assert!((r.break_even_fee - 0.07071068).abs() < 1e-8);
        let r = break_even_fee(&params.with_sigma_eps(0.0), 3.0).unwrap();
        assert_eq!(r.break_even_fee, 0.0);
        assert!(break_even_fee(&params, 0.0).is_err());
    }

    #[test]
    fn analytic_volume_grows_like_root_n() {
        let params = MarketParams::unit(1.0, 1.0, 1.0).unwrap();
        let q100 = analytic_volume(&params, 100).unwrap();
        let q400 = analytic_volume(&params, 400).unwrap();
        let ratio = q400 / q100;
        assert!(ratio > 1.8 && ratio < 2.0, "ratio {ratio}");
    }
}

//! Closed-form expected profits under post-trade clearing.
//!
//! ```text
//! Π_I = c T                 = σ_v √(T s²)
//! Π_N = −λ σ_u² T
//! Π_M = −λ σ_ε² T           = −√T σ_v σ_ε² / √s²
//! ```
//!
//! The subsidy `|Π_M|` splits into the insider's and the noise traders'
//! gains over the `σ_ε = 0` market, in the ratio `√s² : σ_u`.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve_equilibrium, MarketParams};
use crate::error::Result;
use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelfareReport {
    pub pi_i: f64,
    pub pi_n: f64,
    /// Non-positive; zero iff `sigma_eps == 0`.
    pub pi_m: f64,
    /// `|pi_m|`.
    pub subsidy: f64,
    pub delta_pi_i: f64,
    pub delta_pi_n: f64,
    /// `delta_pi_i / delta_pi_n`, defined as its limit 1 at `sigma_eps == 0`.
    pub share_ratio: f64,
    /// The one-shot Kyle analog `σ_v σ_ε² / (2 √s²)`.
    pub single_period_subsidy: f64,
}

pub fn welfare_closed_form(params: &MarketParams) -> Result<WelfareReport> {
    let eq = solve_equilibrium(params)?;
    let horizon = params.horizon;
    let sigma_u2 = params.sigma_u * params.sigma_u;
    let sigma_eps2 = params.sigma_eps * params.sigma_eps;
    let total_sd = sqrt(sigma_u2 + sigma_eps2);
    let root_t = sqrt(horizon);

    let pi_i = eq.c * horizon;
    let pi_n = -eq.lambda * sigma_u2 * horizon;
    let pi_m = -eq.lambda * sigma_eps2 * horizon;

    // √s² − σ_u without cancellation at small σ_ε.
    let excess_sd = sigma_eps2 / (total_sd + params.sigma_u);
    let delta_pi_i = params.sigma_v * root_t * excess_sd;
    let delta_pi_n = params.sigma_v * params.sigma_u * root_t * excess_sd / total_sd;

    Ok(WelfareReport {
        pi_i,
        pi_n,
        pi_m,
        subsidy: -pi_m,
        delta_pi_i,
        delta_pi_n,
        share_ratio: total_sd / params.sigma_u,
        single_period_subsidy: params.sigma_v * sigma_eps2 / (2.0 * total_sd),
    })
}

/// The subsidy rate `σ_v σ_ε² / √s²`, constant in time at unit horizon.
pub fn privacy_rate(params: &MarketParams) -> Result<f64> {
    params.validate()?;
    let sigma_eps2 = params.sigma_eps * params.sigma_eps;
    Ok(params.sigma_v * sigma_eps2 / sqrt(params.sigma_u * params.sigma_u + sigma_eps2))
}

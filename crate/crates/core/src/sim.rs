//! Discretized market on an `N`-step grid.
//!
//! At each left endpoint `t_k = kΔt` the insider trades
//! `Δx = β(t_k)(v − p_k)Δt`, noise traders `Δu = σ_u √Δt Z_u` and the privacy
//! channel adds `Δε = σ_ε(t_k) √Δt Z_ε`. The committed price moves by
//! `λ Δỹ` with `Δỹ = Δx + Δu + Δε`; the real flow `Δx + Δu` settles against
//! the market maker at `p_{k+1}` (post-trade clearing) or `p_k` (pre-trade).
//!
//! Alongside the committed price, each path runs the exact discrete Kalman
//! filter so the gap between the two can be measured.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::equilibrium::{EquilibriumPath, MarketParams};
use crate::error::{Error, Result};
use crate::kalman::kalman_step;
use crate::math::sqrt;
use crate::rng::path_rng;
use crate::schedule::{schedule_subsidy, NoiseSchedule};
use crate::stats::Estimate;
use crate::welfare::welfare_closed_form;

/// |z| above which a Monte Carlo estimate is flagged against its closed form.
pub const Z_FLAG: f64 = 3.0;

/// Price at which a step's real flow settles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clearing {
    /// After the step's price update.
    Post,
    /// Before the step's price update.
    Pre,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_steps: usize,
    pub n_paths: usize,
    pub master_seed: u64,
    pub clearing: Clearing,
    /// Number of leading paths whose per-step trajectory is recorded.
    pub record_paths: usize,
    /// Equal-width time buckets for pooled insider profit.
    pub time_buckets: usize,
}

impl SimConfig {
    pub fn new(n_steps: usize, n_paths: usize, master_seed: u64) -> Self {
        Self {
            n_steps,
            n_paths,
            master_seed,
            clearing: Clearing::Post,
            record_paths: 0,
            time_buckets: 10,
        }
    }

    pub fn with_clearing(self, clearing: Clearing) -> Self {
        Self { clearing, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 2 {
            return Err(Error::param("n_steps", self.n_steps as f64, ">= 2"));
        }
        if self.n_paths < 1 {
            return Err(Error::param("n_paths", self.n_paths as f64, ">= 1"));
        }
        if self.time_buckets < 1 || self.time_buckets > self.n_steps {
            return Err(Error::param(
                "time_buckets",
                self.time_buckets as f64,
                "between 1 and n_steps",
            ));
        }
        Ok(())
    }
}

/// One row of a recorded trajectory, after the step's update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub path_id: u64,
    pub step: usize,
    pub t: f64,
    pub v: f64,
    pub p: f64,
    pub dx: f64,
    pub du: f64,
    pub deps: f64,
    pub dy_obs: f64,
    pub sigma_post: f64,
    #[serde(rename = "profit_I")]
    pub profit_i: f64,
    #[serde(rename = "profit_N")]
    pub profit_n: f64,
    #[serde(rename = "profit_M")]
    pub profit_m: f64,
}

/// Realized totals and diagnostics of one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub profit_i: f64,
    pub profit_n: f64,
    pub profit_m: f64,
    /// `Σ |Δx + Δu|`.
    pub volume: f64,
    /// Part of each step's `|Δx + Δu|` attributed to the insider, in
    /// proportion `|Δx| / (|Δx| + |Δu|)`.
    pub insider_volume: f64,
    /// Remaining part, attributed to noise traders.
    pub noise_volume: f64,
    /// `(v − p_N)²`.
    pub terminal_sq_error: f64,
    /// `max_k |profit_i + profit_n + profit_m|`.
    pub max_zero_sum_residual: f64,
    /// `max_k |p_k − filter mean_k|`.
    pub max_price_filter_gap: f64,
    /// `max_k |filter variance_k − Σ(t_k)|`.
    pub max_filter_variance_error: f64,
    /// Insider profit accumulated within each time bucket.
    pub insider_by_bucket: Vec<f64>,
}

fn finite(value: f64, path: u64, step: usize, quantity: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite {
            path,
            step,
            quantity,
        })
    }
}

/// Simulates path `path_index`; `record` sees every step.
pub fn simulate_path<E, R>(
    eq: &E,
    config: &SimConfig,
    path_index: u64,
    mut record: R,
) -> Result<PathSummary>
where
    E: EquilibriumPath + ?Sized,
    R: FnMut(&StepRecord),
{
    let params = *eq.params();
    let horizon = eq.horizon();
    let n = config.n_steps;
    let dt = horizon / n as f64;
    let sqrt_dt = sqrt(dt);
    let lambda = eq.impact();
    let sigma_u2 = params.sigma_u * params.sigma_u;

    let mut rng = path_rng(config.master_seed, path_index);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

    let v = params.p0 + params.sigma_v * normal();
    let mut p = params.p0;
    let mut filter_mean = params.p0;
    let mut filter_var = params.prior_variance();

    let mut out = PathSummary {
        profit_i: 0.0,
        profit_n: 0.0,
        profit_m: 0.0,
        volume: 0.0,
        insider_volume: 0.0,
        noise_volume: 0.0,
        terminal_sq_error: 0.0,
        max_zero_sum_residual: 0.0,
        max_price_filter_gap: 0.0,
        max_filter_variance_error: 0.0,
        insider_by_bucket: vec![0.0; config.time_buckets],
    };

    for k in 0..n {
        let t = k as f64 * dt;
        let t_next = if k + 1 == n { horizon } else { (k + 1) as f64 * dt };
        let beta = eq.trading_intensity(t)?;
        let noise_var = eq.noise_variance(t);
        // Both draws are taken every step so streams stay aligned across σ_ε.
        let z_u = normal();
        let z_eps = normal();

        let dx = beta * (v - p) * dt;
        let du = params.sigma_u * sqrt_dt * z_u;
        let deps = sqrt(noise_var) * sqrt_dt * z_eps;
        let dy_obs = dx + du + deps;
        let p_next = p + lambda * dy_obs;
        let settle = match config.clearing {
            Clearing::Post => p_next,
            Clearing::Pre => p,
        };

        let flow = dx + du;
        let step_insider = (v - settle) * dx;
        out.profit_i += step_insider;
        out.profit_n += (v - settle) * du;
        out.profit_m += (settle - v) * flow;
        out.insider_by_bucket[k * config.time_buckets / n] += step_insider;

        let abs_flow = flow.abs();
        out.volume += abs_flow;
        let gross = dx.abs() + du.abs();
        if gross > 0.0 {
            let insider_share = abs_flow * dx.abs() / gross;
            out.insider_volume += insider_share;
            out.noise_volume += abs_flow - insider_share;
        }

        let innovation = dy_obs - beta * (filter_mean - p) * dt;
        let posterior = kalman_step(
            filter_mean,
            filter_var,
            innovation,
            beta,
            dt,
            (sigma_u2 + noise_var) * dt,
        )?;
        filter_mean = posterior.mean;
        filter_var = posterior.variance;
        p = finite(p_next, path_index, k, "price")?;
        finite(out.profit_m + out.profit_i + out.profit_n, path_index, k, "profit")?;
        finite(filter_mean, path_index, k, "filter mean")?;

        let closed_var = eq.posterior_variance(t_next)?;
        out.max_filter_variance_error = out
            .max_filter_variance_error
            .max((filter_var - closed_var).abs());
        out.max_price_filter_gap = out.max_price_filter_gap.max((p - filter_mean).abs());
        out.max_zero_sum_residual = out
            .max_zero_sum_residual
            .max((out.profit_i + out.profit_n + out.profit_m).abs());

        record(&StepRecord {
            path_id: path_index,
            step: k,
            t: t_next,
            v,
            p,
            dx,
            du,
            deps,
            dy_obs,
            sigma_post: filter_var,
            profit_i: out.profit_i,
            profit_n: out.profit_n,
            profit_m: out.profit_m,
        });
    }

    out.terminal_sq_error = (v - p) * (v - p);
    Ok(out)
}

/// Monte Carlo aggregates over all paths of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub pi_i: Estimate,
    pub pi_n: Estimate,
    pub pi_m: Estimate,
    /// Total settled volume `Q` at this grid; grows like `√N`.
    pub volume: Estimate,
    pub insider_volume: Estimate,
    pub noise_volume: Estimate,
    pub terminal_sq_error: Estimate,
    pub insider_profit_by_bucket: Vec<Estimate>,
    pub max_zero_sum_residual: f64,
    pub max_filter_variance_error: f64,
    pub max_price_filter_gap: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub horizon: f64,
    pub master_seed: u64,
    pub clearing: Clearing,
    #[serde(skip)]
    pub paths: Vec<PathSummary>,
}

impl SimResult {
    /// Aggregates `paths` in index order.
    pub fn from_paths(config: &SimConfig, horizon: f64, paths: Vec<PathSummary>) -> Self {
        let est = |f: fn(&PathSummary) -> f64| Estimate::from_samples(paths.iter().map(f));
        let max = |f: fn(&PathSummary) -> f64| paths.iter().map(f).fold(0.0, f64::max);
        let insider_profit_by_bucket = (0..config.time_buckets)
            .map(|b| Estimate::from_samples(paths.iter().map(move |s| s.insider_by_bucket[b])))
            .collect();
        Self {
            pi_i: est(|s| s.profit_i),
            pi_n: est(|s| s.profit_n),
            pi_m: est(|s| s.profit_m),
            volume: est(|s| s.volume),
            insider_volume: est(|s| s.insider_volume),
            noise_volume: est(|s| s.noise_volume),
            terminal_sq_error: est(|s| s.terminal_sq_error),
            insider_profit_by_bucket,
            max_zero_sum_residual: max(|s| s.max_zero_sum_residual),
            max_filter_variance_error: max(|s| s.max_filter_variance_error),
            max_price_filter_gap: max(|s| s.max_price_filter_gap),
            n_paths: config.n_paths,
            n_steps: config.n_steps,
            horizon,
            master_seed: config.master_seed,
            clearing: config.clearing,
            paths,
        }
    }
}

/// Runs every path on the calling thread.
pub fn simulate_paths<E>(eq: &E, config: &SimConfig) -> Result<SimResult>
where
    E: EquilibriumPath + ?Sized,
{
    config.validate()?;
    let paths = (0..config.n_paths as u64)
        .map(|i| simulate_path(eq, config, i, |_| {}))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimResult::from_paths(config, eq.horizon(), paths))
}

/// Reference values a run is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelfareTargets {
    pub pi_i: f64,
    pub pi_n: f64,
    pub pi_m: f64,
}

impl WelfareTargets {
    /// Post-clearing closed forms.
    pub fn closed_form(params: &MarketParams) -> Result<Self> {
        let w = welfare_closed_form(params)?;
        Ok(Self {
            pi_i: w.pi_i,
            pi_n: w.pi_n,
            pi_m: w.pi_m,
        })
    }

    /// Pre-trade clearing drops the `λ σ_u²` Itô term from the noise
    /// traders' loss: `Π_N = 0` and `Π_M = −c T`.
    pub fn pre_clearing(params: &MarketParams) -> Result<Self> {
        let w = welfare_closed_form(params)?;
        Ok(Self {
            pi_i: w.pi_i,
            pi_n: 0.0,
            pi_m: -w.pi_i,
        })
    }

    /// Closed forms under a unit-horizon noise schedule.
    pub fn scheduled(params: &MarketParams, schedule: &NoiseSchedule) -> Result<Self> {
        let s = schedule_subsidy(params, schedule)?;
        let sigma_u2 = params.sigma_u * params.sigma_u;
        Ok(Self {
            pi_i: s.lambda * (sigma_u2 + s.mean_variance),
            pi_n: -s.lambda * sigma_u2,
            pi_m: -s.subsidy,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub quantity: &'static str,
    pub closed_form: f64,
    pub mc_mean: f64,
    pub se: f64,
    pub z: f64,
    pub flagged: bool,
}

impl ComparisonRow {
    pub fn new(quantity: &'static str, closed_form: f64, estimate: Estimate) -> Self {
        let z = estimate.z_score(closed_form);
        Self {
            quantity,
            closed_form,
            mc_mean: estimate.mean,
            se: estimate.se,
            z,
            flagged: z.is_nan() || z.abs() > Z_FLAG,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareComparison {
    pub rows: Vec<ComparisonRow>,
}

impl WelfareComparison {
    pub fn flagged(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| r.flagged)
    }

    pub fn row(&self, quantity: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }
}

/// Monte Carlo means against `targets`, with z-scores.
pub fn compare_welfare(result: &SimResult, targets: &WelfareTargets) -> Result<WelfareComparison> {
    if result.n_paths < 2 {
        return Err(Error::InsufficientPaths {
            n_paths: result.n_paths,
            required: 2,
        });
    }
    Ok(WelfareComparison {
        rows: vec![
            ComparisonRow::new("pi_I", targets.pi_i, result.pi_i),
            ComparisonRow::new("pi_N", targets.pi_n, result.pi_n),
            ComparisonRow::new("pi_M", targets.pi_m, result.pi_m),
        ],
    })
}

/// Monte Carlo means against the post-clearing closed forms for `params`.
pub fn estimate_welfare(result: &SimResult, params: &MarketParams) -> Result<WelfareComparison> {
    compare_welfare(result, &WelfareTargets::closed_form(params)?)
}

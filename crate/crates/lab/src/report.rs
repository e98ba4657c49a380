//! JSON envelope shared by every subcommand.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

pub const TOOL: &str = "kylepriv";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `config` holds the resolved inputs keyed by long flag name, so it can be
/// passed back through `--config`. `formulas` maps result fields to the
/// expression they evaluate.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub formulas: BTreeMap<&'static str, &'static str>,
    pub result: Value,
    pub flags: Vec<String>,
}

impl Report {
    pub fn new(command: impl Into<String>, config: Value, result: Value) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command: command.into(),
            config,
            seed: None,
            formulas: BTreeMap::new(),
            result,
            flags: Vec::new(),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn formulas(mut self, entries: &[(&'static str, &'static str)]) -> Self {
        self.formulas.extend(entries.iter().copied());
        self
    }

    pub fn flags(mut self, flags: impl IntoIterator<Item = String>) -> Self {
        self.flags.extend(flags);
        self
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

pub mod formulas {
    pub const EQUILIBRIUM: &[(&str, &str)] = &[
        ("lambda", "sigma_v / sqrt(T (sigma_u^2 + sigma_eps^2))"),
        ("c", "lambda (sigma_u^2 + sigma_eps^2)"),
        ("alpha", "1 / (2 lambda)"),
        ("gamma0", "c T / 2"),
        ("samples.Sigma", "sigma_v^2 (1 - t/T)"),
        ("samples.beta", "c / Sigma(t), t < T"),
        ("expected_value", "alpha sigma_v^2 + gamma0 = Pi_I"),
    ];

    pub const WELFARE: &[(&str, &str)] = &[
        ("pi_i", "c T"),
        ("pi_n", "-lambda sigma_u^2 T"),
        ("pi_m", "-lambda sigma_eps^2 T"),
        ("subsidy", "|pi_m|"),
        ("delta_pi_i", "sigma_v sqrt(T) (sqrt(sigma_u^2 + sigma_eps^2) - sigma_u)"),
        ("delta_pi_n", "delta_pi_i sigma_u / sqrt(sigma_u^2 + sigma_eps^2)"),
        ("share_ratio", "sqrt(sigma_u^2 + sigma_eps^2) / sigma_u"),
        ("single_period_subsidy", "sigma_v sigma_eps^2 / (2 sqrt(sigma_u^2 + sigma_eps^2))"),
    ];

    pub const SIMULATE: &[(&str, &str)] = &[
        ("dynamics", "dx = beta(t_k)(v - p_k) dt, du = sigma_u sqrt(dt) Z_u, deps = sigma_eps(t_k) sqrt(dt) Z_eps, p_{k+1} = p_k + lambda (dx + du + deps)"),
        ("settlement", "post: p_{k+1}, pre: p_k"),
        ("sim.pi_i", "mean of sum (v - p_settle) dx"),
        ("sim.pi_n", "mean of sum (v - p_settle) du"),
        ("sim.pi_m", "mean of sum (p_settle - v)(dx + du)"),
        ("sim.volume", "mean of sum |dx + du|"),
        ("sim.terminal_sq_error", "mean of (v - p_N)^2"),
        ("sim.max_filter_variance_error", "max_k |P_k - sigma_v^2 (1 - t_k/T)|"),
        ("sim.max_price_filter_gap", "max_k |p_k - m_k|"),
        ("welfare.z", "(mc_mean - closed_form) / se"),
        ("welfare.closed_form[post]", "pi_I = c T, pi_N = -lambda sigma_u^2 T, pi_M = -lambda sigma_eps^2 T"),
        ("welfare.closed_form[pre]", "pi_I = c T, pi_N = 0, pi_M = -c T"),
        ("insider_bucket_target", "c T / buckets"),
    ];

    pub const SCHEDULE: &[(&str, &str)] = &[
        ("mean_variance", "(1/T) sum (t_end - t_start) variance"),
        ("lambda", "sigma_v / sqrt(sigma_u^2 + <sigma_eps^2>)"),
        ("subsidy", "sigma_v <sigma_eps^2> / sqrt(sigma_u^2 + <sigma_eps^2>)"),
        ("segment_rates.rate", "lambda sigma_eps(t)^2"),
    ];

    pub const FEE: &[(&str, &str)] = &[
        ("subsidy", "sigma_v sigma_eps^2 sqrt(T) / sqrt(sigma_u^2 + sigma_eps^2)"),
        ("break_even_fee", "subsidy / Q"),
        ("volume_q[analytic]", "sum_k sqrt(2/pi) sqrt(sigma_u^2 dt + beta_k^2 dt^2 Sigma(t_k))"),
        ("volume_q[mc]", "mean of sum_k |dx + du| on the block grid"),
        ("net_of_fee.net_pi_I", "pi_I - f sum_k |dx + du| |dx| / (|dx| + |du|), target sigma_v sigma_u sqrt(T)"),
        ("net_of_fee.net_pi_N", "pi_N - f sum_k |dx + du| |du| / (|dx| + |du|), target -sigma_v sigma_u sqrt(T)"),
        ("net_of_fee.mm_net", "pi_M + f Q, target 0"),
    ];

    pub const DP_MAP: &[(&str, &str)] = &[
        ("sigma_block", "sigma_eps / sqrt(N)"),
        ("epsilon_block", "sensitivity sqrt(2 ln(1.25 / delta_block)) / sigma_block"),
        ("epsilon_joint[basic]", "N epsilon_block"),
        ("delta_joint[basic]", "N delta_block"),
        ("epsilon_joint[advanced]", "epsilon_block sqrt(2 N ln(1/delta_block)) + N epsilon_block (e^epsilon_block - 1)"),
        ("delta_joint[advanced]", "(N + 1) delta_block"),
    ];

    pub const DP_INVERSE: &[(&str, &str)] = &[
        ("epsilon_block[basic]", "epsilon_joint / N"),
        ("delta_block[basic]", "delta_joint / N"),
        ("epsilon_block[advanced]", "epsilon_joint / sqrt(N)"),
        ("delta_block[advanced]", "delta_joint / (2 N)"),
        ("sigma_block", "sensitivity sqrt(2 ln(1.25 / delta_block)) / epsilon_block"),
        ("implied_sigma_eps", "sqrt(N) sigma_block"),
    ];

    pub const LVR: &[(&str, &str)] = &[
        ("dynamics", "q_{k+1} = q_k exp((mu - sigma^2/2) dt + sigma sqrt(dt) Z)"),
        ("lvr_step", "sqrt(k) (sqrt(q_{k+1}) - sqrt(q_k))^2 / sqrt(q_k)"),
        ("mc_lvr", "mean of sum lvr_step"),
        ("closed_form_integral", "mean of sum (sigma^2/8) V(q_k) dt, V(q) = 2 sqrt(k q)"),
        ("expected", "(sigma^2/8) V(q0) (e^{a T} - 1) / a, a = mu/2 - sigma^2/8"),
        ("relative_gap", "|mc_lvr - closed_form_integral| / closed_form_integral"),
    ];

    pub const CORRESPONDENCE: &[(&str, &str)] = &[
        ("lvr.rate", "(sigma^2/8) V(q0) = -(1/2) sigma^2 q0^2 V''(q0)"),
        ("privacy.rate", "lambda sigma_eps^2 = sigma_eps^2 sigma_v / sqrt(T (sigma_u^2 + sigma_eps^2))"),
        ("small_noise_approx", "sigma_v sigma_eps^2 / sigma_u"),
        ("large_noise_approx", "sigma_v sigma_eps"),
        ("cumulative_privacy_subsidy", "privacy.rate T"),
        ("cumulative_lvr_expected", "E int_0^T (sigma^2/8) V(q_t) dt"),
    ];
}

//! One step of the market maker's linear-Gaussian filter.
//!
//! Prior `v ~ N(m, P)`; observation `Δỹ ~ N(β (v − m) Δt, F)` with
//! `F = (σ_u² + σ_ε²) Δt`. The gain is `g = β Δt P / (β² Δt² P + F)`.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub mean: f64,
    pub variance: f64,
    pub gain: f64,
}

/// Exact conditional of `v` given one flow increment.
///
/// `observed_increment` is centred on the prior mean: the caller subtracts
/// `β (m − p) Δt` when the quoted price `p` differs from the filter mean.
pub fn kalman_step(
    prior_mean: f64,
    prior_var: f64,
    observed_increment: f64,
    beta: f64,
    dt: f64,
    flow_var: f64,
) -> Result<Posterior> {
    non_negative("prior_var", prior_var)?;
    positive("dt", dt)?;
    positive("flow_var", flow_var)?;
    if !beta.is_finite() {
        return Err(Error::param("beta", beta, "finite"));
    }
    let loading = beta * dt;
    let gain = loading * prior_var / (loading * loading * prior_var + flow_var);
    Ok(Posterior {
        mean: prior_mean + gain * observed_increment,
        variance: prior_var - gain * loading * prior_var,
        gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_prior_is_unchanged() {
        let post = kalman_step(0.3, 0.0, 12.0, 2.0, 0.01, 0.02).unwrap();
        assert_eq!(post.mean, 0.3);
        assert_eq!(post.variance, 0.0);
    }

    #[test]
    fn uninformative_observation() {
        let post = kalman_step(0.3, 1.5, -4.0, 0.0, 0.01, 0.02).unwrap();
        assert_eq!(post.mean, 0.3);
        assert_eq!(post.variance, 1.5);
    }

    #[test]
    fn hand_evaluated_gain() {
        let post = kalman_step(0.0, 1.0, 0.05, 1.0, 0.01, 0.02).unwrap();
        assert!((post.gain - 0.4975124).abs() < 1e-7);
        assert!((post.mean - 0.0248756).abs() < 1e-7);
        assert!((post.variance - 0.9950249).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(kalman_step(0.0, 1.0, 0.0, 1.0, 0.0, 0.02).is_err());
        assert!(kalman_step(0.0, 1.0, 0.0, 1.0, 0.01, 0.0).is_err());
        assert!(kalman_step(0.0, -1.0, 0.0, 1.0, 0.01, 0.02).is_err());
    }
}

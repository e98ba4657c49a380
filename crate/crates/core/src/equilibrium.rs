//! Linear Markovian equilibrium of the noise-perturbed Kyle market.
//!
//! The insider trades `dx = β(t)(v − p)dt`, noise traders `du = σ_u dW^u`,
//! and the market maker observes `dỹ = dx + du + σ_ε dW^ε`, moving the price
//! by `dp = λ dỹ`. With effective noise `s² = σ_u² + σ_ε²` and horizon `T`:
//!
//! ```text
//! λ    = σ_v / √(T s²)
//! c    = β(t) Σ(t) = σ_v √(s² / T)
//! Σ(t) = σ_v² (1 − t/T)
//! α    = 1 / (2λ),   γ(t) = (c/2)(T − t)
//! ```
//!
//! The insider's value function is `J(v, p, t) = α (v − p)² + γ(t)`.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};
use crate::math::sqrt;

/// Primitive volatilities, prior and horizon of the market.
///
/// The prior variance of the asset value is always `sigma_v²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Prior standard deviation of the asset value.
    pub sigma_v: f64,
    /// Noise-trader flow intensity (quantity per √time).
    pub sigma_u: f64,
    /// Privacy-noise intensity on the observed flow (quantity per √time).
    pub sigma_eps: f64,
    /// Trading horizon `T`.
    pub horizon: f64,
    /// Prior mean of the asset value.
    pub p0: f64,
}

impl MarketParams {
    /// Validated constructor.
    pub fn new(sigma_v: f64, sigma_u: f64, sigma_eps: f64, horizon: f64, p0: f64) -> Result<Self> {
        let params = Self {
            sigma_v,
            sigma_u,
            sigma_eps,
            horizon,
            p0,
        };
        params.validate()?;
        Ok(params)
    }

    /// Unit horizon, zero prior mean.
    pub fn unit(sigma_v: f64, sigma_u: f64, sigma_eps: f64) -> Result<Self> {
        Self::new(sigma_v, sigma_u, sigma_eps, 1.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        positive("sigma_v", self.sigma_v)?;
        positive("sigma_u", self.sigma_u)?;
        non_negative("sigma_eps", self.sigma_eps)?;
        positive("horizon", self.horizon)?;
        if !self.p0.is_finite() {
            return Err(Error::param("p0", self.p0, "finite"));
        }
        Ok(())
    }

    /// Copy with a different privacy-noise intensity.
    pub fn with_sigma_eps(self, sigma_eps: f64) -> Self {
        Self { sigma_eps, ..self }
    }

    /// Copy with a different horizon.
    pub fn with_horizon(self, horizon: f64) -> Self {
        Self { horizon, ..self }
    }

    /// `Σ₀ = σ_v²`.
    pub fn prior_variance(&self) -> f64 {
        self.sigma_v * self.sigma_v
    }

    /// `σ_u² + σ_ε²`, the variance rate of everything that is not insider flow.
    pub fn effective_noise_variance(&self) -> f64 {
        self.sigma_u * self.sigma_u + self.sigma_eps * self.sigma_eps
    }
}

/// Time-dependent view of an equilibrium, shared by the constant-noise
/// [`Equilibrium`] and the scheduled one in [`crate::schedule`].
///
/// The simulator is written against this trait.
pub trait EquilibriumPath {
    fn params(&self) -> &MarketParams;

    /// Committed price impact `λ`, constant in time.
    fn impact(&self) -> f64;

    /// Privacy-noise variance rate `σ_ε(t)²`.
    fn noise_variance(&self, t: f64) -> f64;

    /// Posterior variance `Σ(t)` on `[0, T]`.
    fn posterior_variance(&self, t: f64) -> Result<f64>;

    /// Insider trading intensity `β(t)` on `[0, T)`.
    fn trading_intensity(&self, t: f64) -> Result<f64>;

    fn horizon(&self) -> f64 {
        self.params().horizon
    }
}

/// Solved equilibrium coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    /// Price impact `λ`.
    pub lambda: f64,
    /// The constant product `β(t) Σ(t)`.
    pub c: f64,
    /// Value-function curvature; `α λ = 1/2`.
    pub alpha: f64,
    /// Value-function intercept at `t = 0`.
    pub gamma0: f64,
    pub params: MarketParams,
}

/// Solves the equilibrium for `params`.
pub fn solve_equilibrium(params: &MarketParams) -> Result<Equilibrium> {
    params.validate()?;
    let noise = params.effective_noise_variance();
    let lambda = params.sigma_v / sqrt(params.horizon * noise);
    let c = lambda * noise;
    Ok(Equilibrium {
        lambda,
        c,
        alpha: 0.5 / lambda,
        gamma0: 0.5 * c * params.horizon,
        params: *params,
    })
}

impl Equilibrium {
    fn check_time(&self, t: f64) -> Result<()> {
        let horizon = self.params.horizon;
        if t.is_nan() || !(0.0..=horizon).contains(&t) {
            return Err(Error::TimeOutOfRange { t, horizon });
        }
        Ok(())
    }

    /// `Σ(t) = σ_v² (1 − t/T)`.
    pub fn posterior_variance(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let p = &self.params;
        Ok(p.prior_variance() * (1.0 - t / p.horizon))
    }

    /// `β(t) = c / Σ(t)`; an error at `t ≥ T`.
    pub fn trading_intensity(&self, t: f64) -> Result<f64> {
        let horizon = self.params.horizon;
        if t >= horizon {
            return Err(Error::HorizonSingularity { t, horizon });
        }
        Ok(self.c / self.posterior_variance(t)?)
    }

    /// `γ(t) = (c/2)(T − t)`.
    pub fn value_intercept(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(0.5 * self.c * (self.params.horizon - t))
    }

    /// Insider value function `J(v, p, t) = α (v − p)² + γ(t)`.
    pub fn value_function(&self, v: f64, p: f64, t: f64) -> Result<f64> {
        let gap = v - p;
        Ok(self.alpha * gap * gap + self.value_intercept(t)?)
    }

    /// `E[J(v, p₀, 0)] = α σ_v² + γ(0)`, which equals the insider's expected profit.
    pub fn expected_initial_value(&self) -> f64 {
        self.alpha * self.params.prior_variance() + self.gamma0
    }
}

impl EquilibriumPath for Equilibrium {
    fn params(&self) -> &MarketParams {
        &self.params
    }

    fn impact(&self) -> f64 {
        self.lambda
    }

    fn noise_variance(&self, _t: f64) -> f64 {
        self.params.sigma_eps * self.params.sigma_eps
    }

    fn posterior_variance(&self, t: f64) -> Result<f64> {
        Equilibrium::posterior_variance(self, t)
    }

    fn trading_intensity(&self, t: f64) -> Result<f64> {
        Equilibrium::trading_intensity(self, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn classical_kyle_without_privacy_noise() {
        let eq = solve_equilibrium(&MarketParams::unit(1.0, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(eq.lambda, 1.0);
        assert_eq!(eq.c, 1.0);
    }

    #[test]
    fn unit_noise_equilibrium() {
        let eq = solve_equilibrium(&MarketParams::unit(1.0, 1.0, 1.0).unwrap()).unwrap();
        assert!(close(eq.lambda, 0.7071068, 1e-7));
        assert!(close(eq.c, 1.4142136, 1e-7));
    }

    #[test]
    fn generic_horizon_scaling() {
        let params = MarketParams::new(1.0, 1.0, 1.0, 4.0, 0.0).unwrap();
        let eq = solve_equilibrium(&params).unwrap();
        assert!(close(eq.lambda, 0.3535534, 1e-7));
        assert!(close(eq.c, 0.7071068, 1e-7));
        assert_eq!(eq.posterior_variance(4.0).unwrap(), 0.0);
    }

    #[test]
    fn posterior_variance_examples() {
        let eq = solve_equilibrium(&MarketParams::unit(1.0, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(eq.posterior_variance(0.0).unwrap(), 1.0);
        assert_eq!(eq.posterior_variance(1.0).unwrap(), 0.0);
        let eq = solve_equilibrium(&MarketParams::new(2.0, 1.0, 0.0, 4.0, 0.0).unwrap()).unwrap();
        assert_eq!(eq.posterior_variance(1.0).unwrap(), 3.0);
        assert!(matches!(
            eq.posterior_variance(4.5),
            Err(Error::TimeOutOfRange { .. })
        ));
        assert!(eq.posterior_variance(-0.1).is_err());
        assert!(eq.posterior_variance(f64::NAN).is_err());
    }

    #[test]
    fn trading_intensity_examples() {
        let eq = solve_equilibrium(&MarketParams::unit(1.0, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(eq.trading_intensity(0.0).unwrap(), 1.0);

        let eq = solve_equilibrium(&MarketParams::unit(1.0, 1.0, 1.0).unwrap()).unwrap();
        assert!(close(eq.trading_intensity(0.5).unwrap(), 2.8284271, 1e-7));
        assert!(close(eq.trading_intensity(0.999).unwrap(), 1414.2136, 1e-3));
        assert!(matches!(
            eq.trading_intensity(1.0),
            Err(Error::HorizonSingularity { .. })
        ));
    }

    #[test]
    fn intensity_times_variance_is_constant() {
        let eq = solve_equilibrium(&MarketParams::new(1.3, 0.7, 0.4, 2.5, 3.0).unwrap()).unwrap();
        for i in 0..100 {
            let t = 2.5 * i as f64 / 100.0;
            let product = eq.trading_intensity(t).unwrap() * eq.posterior_variance(t).unwrap();
            assert!(close(product, eq.c, 1e-12 * eq.c));
        }
    }

    #[test]
    fn value_function_identity() {
        let eq = solve_equilibrium(&MarketParams::new(1.7, 0.6, 1.1, 3.0, 0.0).unwrap()).unwrap();
        assert!(close(eq.alpha * eq.lambda, 0.5, 1e-15));
        assert!(close(eq.expected_initial_value(), eq.c * 3.0, 1e-12));
        assert_eq!(eq.value_intercept(3.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        let cases = [
            (0.0, 1.0, 0.0, 1.0, "sigma_v"),
            (1.0, -1.0, 0.0, 1.0, "sigma_u"),
            (1.0, 1.0, -1.0, 1.0, "sigma_eps"),
            (1.0, 1.0, 0.0, 0.0, "horizon"),
            (f64::NAN, 1.0, 0.0, 1.0, "sigma_v"),
        ];
        for (sv, su, se, t, name) in cases {
            match MarketParams::new(sv, su, se, t, 0.0) {
                Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, name),
                other => panic!("expected rejection of {name}, got {other:?}"),
            }
        }
    }
}

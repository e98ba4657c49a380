//! Numerical core for the continuous-time Kyle market observed through a
//! Brownian privacy channel.
//!
//! The market maker commits to a constant price impact `λ` and prices on the
//! aggregate order flow plus independent noise of intensity `σ_ε`. This crate
//! holds everything that is pure computation:
//!
//! * [`equilibrium`]: the linear Markovian equilibrium (`λ`, `β(t)`, `Σ(t)`)
//!   and the value-function coefficients.
//! * [`welfare`]: closed-form expected profits of insider, noise traders and
//!   market maker, the privacy subsidy and its decomposition.
//! * [`schedule`]: piecewise-constant time-varying noise intensities.
//! * [`kalman`]: the exact linear-Gaussian posterior update of one step.
//! * [`sim`]: the discretized market on one Monte Carlo path, plus
//!   aggregation of many paths into estimates with standard errors.
//! * [`deploy`]: discrete-block deployment, Gaussian-mechanism DP budgets and
//!   break-even fees.
//! * [`lvr`]: loss-versus-rebalancing for a constant-product AMM and the
//!   correspondence with the privacy subsidy.
//!
//! The crate is `no_std` and only needs `alloc`. Parallel drivers, file
//! formats and the command line live in the `kylepriv-lab` crate.

#![no_std]
#![deny(missing_debug_implementations, rust_2018_idioms)]
#![cfg_attr(test, allow(clippy::approx_constant))]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod deploy;
pub mod equilibrium;
mod error;
pub mod kalman;
pub mod lvr;
mod math;
pub mod rng;
pub mod schedule;
pub mod sim;
pub mod stats;
pub mod welfare;

pub use equilibrium::{solve_equilibrium, Equilibrium, EquilibriumPath, MarketParams};
pub use error::{Error, Result};
pub use schedule::{NoiseSchedule, ScheduledEquilibrium, Segment};
pub use sim::{Clearing, SimConfig, SimResult};
pub use stats::Estimate;
pub use welfare::{welfare_closed_form, WelfareReport};

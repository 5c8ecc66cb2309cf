//! Rank-based semiparametric inference on the slope of a predictive
//! regression with a highly persistent regressor.
//!
//! The crate is organised along the pipeline:
//!
//! * [`dgp`] simulates `y_t = μ + β x_{t-1} + ε^y_t`, `x_t = γ x_{t-1} + ε^x_t`
//!   under Gaussian, Student-t, copula, Pearson and GARCH innovations.
//! * [`reference`] holds reference densities, their scores and `J_p`.
//! * [`processes`] turns a sample into ranks, partial-sum and bridged score
//!   paths and the four sufficient statistics.
//! * [`limit`] simulates the Ornstein-Uhlenbeck limit experiment and
//!   evaluates the invariant log-likelihood ratio.
//! * [`alfd`] calibrates the approximate least favorable null weighting.
//! * [`testkit`] runs the rank test, the standard t-type test with switching
//!   and the Gaussian residual baseline on data.
//! * [`harness`] drives Monte Carlo power experiments and file outputs.

pub mod alfd;
pub mod dgp;
pub mod error;
pub mod harness;
pub mod limit;
pub mod numeric;
pub mod processes;
pub mod reference;
pub mod rng;
pub mod testkit;

pub use error::{Error, Result};

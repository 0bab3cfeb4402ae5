//! Parameter-free stochastic approximation under error bound conditions.
//!
//! The crate is organised around a handful of layers:
//!
//! * [`geometry`]: Euclidean projections onto simple convex sets, projections
//!   onto ball caps `W ∩ B(c, R)`, the ℓ1 proximal map and p-norm mirror steps.
//! * [`problems`]: stochastic problem oracles with closed-form risk, optimal
//!   sets and ground-truth error-bound parameters `(θ, α)`.
//! * [`solvers`]: the stochastic subgradient family (SSG, SSGS, PSG, SMD, SAG)
//!   and the multi-stage adaptive drivers (ASA, ASA2, ASA3) with run tracing.
//! * [`conditions`]: empirical estimation of the error bound condition and
//!   Monte-Carlo checks of the relaxed Bernstein and central conditions.
//! * [`erm`]: empirical risk minimisation and excess-risk rate studies.
//! * [`data`]: libsvm ingestion, deterministic splits and finite-sum problems.
//! * [`rates`]: log-log rate fitting shared by the studies and the bench crate.

pub mod conditions;
pub mod data;
pub mod erm;
mod error;
pub mod geometry;
pub mod linalg;
mod optim;
pub mod problems;
pub mod rates;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};

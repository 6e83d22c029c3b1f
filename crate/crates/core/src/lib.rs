//! Small-noise SDEs with multiplicative stochastic volatility.
//!
//! The observed process solves
//!
//! ```text
//! dX_t = θ(t) X_t dt + ε σ₁(t, X_t) σ₂(t, Y_t) dW_t,   X_0 = x₀,   0 ≤ t ≤ T
//! ```
//!
//! where `Y` is a process driven by the same Brownian motion `W`. This crate
//! simulates such processes, estimates the unknown multiplier `θ(t)` with two
//! kernel estimators, and checks their consistency, rate and limit-law
//! behaviour by Monte Carlo as ε → 0.
//!
//! Module map:
//!
//! - [`model`]: coefficient families, regularity checks, the ε = 0 limit path.
//! - [`simulate`]: Euler–Maruyama paths and reproducible ensembles.
//! - [`kernels`]: compactly supported kernels of any vanishing-moment order.
//! - [`estimate`]: the convolution estimator of `θ(t)x_t` and the stopped-process
//!   estimator of `θ(t)`.
//! - [`experiments`]: the Monte Carlo harness and its reports.
//! - [`config`] / [`cli`]: declarative run configuration and the command-line
//!   front end.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod estimate;
pub mod experiments;
pub mod kernels;
pub mod model;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use estimate::{EstimateSeries, EstimatorKind, StoppedProcess};
pub use kernels::{Kernel, KernelFamily};
pub use model::{ModelSpec, Multiplier, PathGrid, ScalarField2, ThetaFamily, YDynamics};
pub use simulate::{Ensemble, Path};

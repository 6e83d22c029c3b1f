//! Limit law of the standardized convolution estimator.

use serde::Serialize;

use super::{replicate_sum, MonteCarlo};
use crate::error::Result;
use crate::estimate::estimate_j;
use crate::kernels::{bandwidth_main, kernel_moment, Kernel, Moment};
use crate::model::{limit_path_derivatives, ModelSpec, PathGrid};
use crate::simulate::{par_replicates, PathSimulator};
use crate::stats::{ks_normal, mean, variance, KsResult};

pub const VARIANCE_RATIO_TOLERANCE: f64 = 0.15;
pub const KS_MIN_P_VALUE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NuEstimate {
    pub t: f64,
    /// Monte Carlo mean of `(σ₁(t,X_t)σ₂(t,Y_t))²`.
    pub value: f64,
    pub std_error: f64,
    pub n_replicates: usize,
}

/// `ν(t) = E[(σ₁(t,X_t)σ₂(t,Y_t))²]` at the grid point nearest `t`.
pub fn estimate_nu(spec: &ModelSpec, grid: &PathGrid, epsilon: f64, t: f64, mc: &MonteCarlo) -> Result<NuEstimate> {
    let sim = PathSimulator::new(spec, grid);
    let i = grid.nearest_index(t);
    let ti = grid.time(i);
    let samples = par_replicates(mc.n_replicates, mc.master_seed, |_, seed| {
        let p = sim.simulate(epsilon, seed)?;
        Ok(spec.diffusion(ti, p.x[i], p.y[i]).powi(2))
    })?;
    let n = samples.len() as f64;
    let std_error = if samples.len() > 1 {
        (variance(&samples) / n).sqrt()
    } else {
        0.0
    };
    Ok(NuEstimate {
        t,
        value: mean(&samples),
        std_error,
        n_replicates: samples.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionCheck {
    pub epsilon: f64,
    pub t: f64,
    pub k: usize,
    pub bandwidth: f64,
    pub n_steps: usize,
    pub n_replicates: usize,
    /// `(2k+3)/(2k+4)`.
    pub alpha: f64,
    /// `φ^{k+1} J^{(k+1)}(t) ∫u^{k+1}G / (k+1)!`.
    pub bias_term: f64,
    pub nu: f64,
    /// True when `σ₁σ₂ ≡ 1`, so `ν ≡ 1` and the limit is Gaussian.
    pub nu_exact: bool,
    pub int_g_squared: f64,
    /// `ν(t)∫G²`.
    pub reference_variance: f64,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub variance_ratio: f64,
    pub ks: KsResult,
    pub mean_within_3se: bool,
    /// `None` when the model does not guarantee a Gaussian limit; the
    /// statistics are then recorded without a verdict.
    pub passed: Option<bool>,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

/// Simulates `n_replicates` paths and standardizes `θ̂_t X_t` at `t`:
/// `ε^{-α}(θ̂_t X_t - J(t) - bias)` with `φ_ε = ε^{1/(k+2)}`.
pub fn distribution_check(
    spec: &ModelSpec,
    kernel: &Kernel,
    epsilon: f64,
    t: f64,
    mc: &MonteCarlo,
) -> Result<DistributionCheck> {
    let k = spec.theta.k;
    let bandwidth = bandwidth_main(epsilon, k)?;
    let grid = mc.steps.grid_for(spec.horizon, bandwidth, kernel);
    let alpha = (2.0 * k as f64 + 3.0) / (2.0 * k as f64 + 4.0);
    let factorial: f64 = (1..=k + 1).map(|m| m as f64).product();
    let bias_term = bandwidth.powi(k as i32 + 1)
        * limit_path_derivatives(spec, t, k + 1)?
        * kernel_moment(kernel, k + 1, Moment::Plain)
        / factorial;
    let j = spec.j(t);
    let scale = epsilon.powf(-alpha);

    let sim = PathSimulator::new(spec, &grid);
    let i_t = grid.nearest_index(t);
    let t_grid = grid.time(i_t);
    let pairs = par_replicates(mc.n_replicates, mc.master_seed, |_, seed| {
        let p = sim.simulate(epsilon, seed)?;
        let jh = estimate_j(&p, kernel, bandwidth, t)?;
        Ok((
            scale * (jh - j - bias_term),
            spec.diffusion(t_grid, p.x[i_t], p.y[i_t]).powi(2),
        ))
    })?;
    let samples: Vec<f64> = pairs.iter().map(|p| p.0).collect();

    let nu_exact = spec.sigma1.is_one() && spec.sigma2.is_one();
    let nu = if nu_exact {
        1.0
    } else {
        pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64
    };
    let int_g_squared = kernel_moment(kernel, 0, Moment::Squared);
    let reference_variance = nu * int_g_squared;
    let sample_mean = mean(&samples);
    let sample_variance = variance(&samples);
    let n = samples.len() as f64;
    let mean_within_3se = sample_mean.abs() <= 3.0 * (sample_variance / n).sqrt();
    let variance_ratio = sample_variance / reference_variance;
    let ks = ks_normal(&samples, 0.0, reference_variance.sqrt());
    let passed = nu_exact.then(|| {
        (variance_ratio - 1.0).abs() <= VARIANCE_RATIO_TOLERANCE && ks.p_value > KS_MIN_P_VALUE && mean_within_3se
    });
    Ok(DistributionCheck {
        epsilon,
        t,
        k,
        bandwidth,
        n_steps: grid.n_steps,
        n_replicates: mc.n_replicates,
        alpha,
        bias_term,
        nu,
        nu_exact,
        int_g_squared,
        reference_variance,
        sample_mean,
        sample_variance,
        variance_ratio,
        ks,
        mean_within_3se,
        passed,
        samples,
    })
}

/// Monte Carlo `ν` at several times from one pass over the replicates.
pub fn nu_profile(spec: &ModelSpec, grid: &PathGrid, epsilon: f64, times: &[f64], mc: &MonteCarlo) -> Result<Vec<f64>> {
    let sim = PathSimulator::new(spec, grid);
    let idx: Vec<usize> = times.iter().map(|&t| grid.nearest_index(t)).collect();
    let sums = replicate_sum(mc.n_replicates, mc.master_seed, idx.len(), |_, seed| {
        let p = sim.simulate(epsilon, seed)?;
        Ok(idx
            .iter()
            .map(|&i| spec.diffusion(grid.time(i), p.x[i], p.y[i]).powi(2))
            .collect())
    })?;
    Ok(sums.into_iter().map(|s| s / mc.n_replicates as f64).collect())
}

//! Kernel estimators of the multiplier.
//!
//! The convolution estimator targets `J(t) = θ(t)x_t` through
//! `(1/φ) Σ_i G((t_i - t)/φ) (X_{i+1} - X_i)`; the stopped-process estimator
//! targets `θ(t)` directly through the increments `dX/X` of a path kept above
//! `½x₀e^{-LT}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::model::{ModelSpec, PathGrid};
use crate::simulate::Path;

/// Relative size of `|X|` below which division by the observed state is refused.
pub const DEGENERATE_STATE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Main,
    Alternate,
}

/// What `θ̂_t X_t` is divided by to recover `θ(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StateDivisor {
    /// Observed `X` at the nearest grid index.
    #[default]
    Observed,
    /// The ε = 0 limit path `x_t`.
    Limit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateSeries {
    pub kind: EstimatorKind,
    pub bandwidth: f64,
    pub kernel: Kernel,
    pub eval_times: Vec<f64>,
    pub j_hat: Vec<f64>,
    pub theta_hat: Vec<f64>,
}

/// Indices of increments whose left point lies in `[a, b]`.
fn increment_range(grid: &PathGrid, a: f64, b: f64) -> std::ops::RangeInclusive<usize> {
    let dt = grid.dt();
    let lo = ((a / dt) - 1e-9).ceil().max(0.0) as usize;
    let hi = (((b / dt) + 1e-9).floor().max(0.0) as usize).min(grid.n_steps - 1);
    lo..=hi
}

fn check_window(grid: &PathGrid, t: f64, bandwidth: f64, lo: f64, hi: f64) -> Result<()> {
    let horizon = grid.horizon;
    let slack = 1e-12 * horizon;
    if !(bandwidth > 0.0) {
        return Err(Error::Precondition(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    if lo < -slack || hi > horizon + slack {
        return Err(Error::Boundary {
            t,
            bandwidth,
            lo,
            hi,
            horizon,
        });
    }
    Ok(())
}

/// `θ̂_t X_t`: left-point discretization of `(1/φ)∫₀ᵀ G((τ - t)/φ) dX_τ`.
pub fn estimate_j(path: &Path, kernel: &Kernel, bandwidth: f64, t: f64) -> Result<f64> {
    let (lo, hi) = (t + bandwidth * kernel.lower, t + bandwidth * kernel.upper);
    check_window(&path.grid, t, bandwidth, lo, hi)?;
    let mut acc = 0.0;
    for i in increment_range(&path.grid, lo, hi) {
        let u = (path.grid.time(i) - t) / bandwidth;
        acc += kernel.eval(u) * path.increment(i);
    }
    Ok(acc / bandwidth)
}

/// `θ̂(t) = θ̂_t X_t / X_{⌊t⌉}`.
pub fn estimate_theta_main(path: &Path, kernel: &Kernel, bandwidth: f64, t: f64) -> Result<f64> {
    let j = estimate_j(path, kernel, bandwidth, t)?;
    let state = path.x[path.grid.nearest_index(t)];
    if state == 0.0 || state.abs() < DEGENERATE_STATE * path.x[0].abs() {
        return Err(Error::DegenerateState { t, value: state });
    }
    Ok(j / state)
}

/// As [`estimate_theta_main`] but dividing by the known limit path value.
pub fn estimate_theta_main_by_limit(
    path: &Path,
    spec: &ModelSpec,
    kernel: &Kernel,
    bandwidth: f64,
    t: f64,
) -> Result<f64> {
    Ok(estimate_j(path, kernel, bandwidth, t)? / spec.limit_value(t))
}

/// The path restricted to the event that it stays above `½x₀e^{-LT}`, and
/// the process `Z` with `dZ = I(A_t) dX_t / X_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct StoppedProcess {
    pub grid: PathGrid,
    /// `I(A_{t_i})`; non-increasing.
    pub indicator_a: Vec<bool>,
    /// `Z_{t_i}`, `Z_0 = 0`.
    pub z: Vec<f64>,
    /// `I(A) = I(A_T)`.
    pub event_a_holds: bool,
    pub threshold: f64,
}

impl StoppedProcess {
    #[inline]
    pub fn dz(&self, i: usize) -> f64 {
        self.z[i + 1] - self.z[i]
    }
}

pub fn build_stopped_process(path: &Path, spec: &ModelSpec) -> Result<StoppedProcess> {
    if !(spec.x0 > 0.0) {
        return Err(Error::Precondition(format!(
            "the stopped-process estimator needs x0 > 0, got {}",
            spec.x0
        )));
    }
    let threshold = 0.5 * spec.x0 * (-spec.theta.bound * spec.horizon).exp();
    let n = path.grid.n_steps;
    let mut indicator_a = Vec::with_capacity(n + 1);
    let mut z = Vec::with_capacity(n + 1);
    let mut alive = true;
    let mut acc = 0.0;
    z.push(0.0);
    for i in 0..=n {
        alive = alive && path.x[i] >= threshold;
        indicator_a.push(alive);
        if i < n {
            if alive {
                acc += path.increment(i) / path.x[i];
            }
            z.push(acc);
        }
    }
    Ok(StoppedProcess {
        grid: path.grid,
        event_a_holds: alive,
        indicator_a,
        z,
        threshold,
    })
}

/// `θ̃(t) = I(A) (1/φ) Σ_i G((t - t_i)/φ) ΔZ_i`.
pub fn estimate_theta_alt(stopped: &StoppedProcess, kernel: &Kernel, bandwidth: f64, t: f64) -> Result<f64> {
    let (lo, hi) = (t - bandwidth * kernel.upper, t - bandwidth * kernel.lower);
    check_window(&stopped.grid, t, bandwidth, lo, hi)?;
    if !stopped.event_a_holds {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for i in increment_range(&stopped.grid, lo, hi) {
        let u = (t - stopped.grid.time(i)) / bandwidth;
        acc += kernel.eval(u) * stopped.dz(i);
    }
    Ok(acc / bandwidth)
}

/// Evaluates an estimator at many times.
///
/// For the alternate kind `j_hat` holds `θ̃(t)·X_{⌊t⌉}` so that both kinds fill
/// the same columns.
pub fn estimate_series(
    path: &Path,
    spec: &ModelSpec,
    kernel: &Kernel,
    bandwidth: f64,
    times: &[f64],
    kind: EstimatorKind,
    divisor: StateDivisor,
) -> Result<EstimateSeries> {
    let mut j_hat = Vec::with_capacity(times.len());
    let mut theta_hat = Vec::with_capacity(times.len());
    match kind {
        EstimatorKind::Main => {
            for &t in times {
                let j = estimate_j(path, kernel, bandwidth, t)?;
                let theta = match divisor {
                    StateDivisor::Observed => estimate_theta_main(path, kernel, bandwidth, t)?,
                    StateDivisor::Limit => j / spec.limit_value(t),
                };
                j_hat.push(j);
                theta_hat.push(theta);
            }
        }
        EstimatorKind::Alternate => {
            let stopped = build_stopped_process(path, spec)?;
            for &t in times {
                let theta = estimate_theta_alt(&stopped, kernel, bandwidth, t)?;
                j_hat.push(theta * path.x[path.grid.nearest_index(t)]);
                theta_hat.push(theta);
            }
        }
    }
    Ok(EstimateSeries {
        kind,
        bandwidth,
        kernel: kernel.clone(),
        eval_times: times.to_vec(),
        j_hat,
        theta_hat,
    })
}

//! Pathwise and mean-square deviation of `X` from the limit path.

use serde::Serialize;

use super::{replicate_sum, MonteCarlo};
use crate::error::{Error, Result};
use crate::model::{limit_path, ModelSpec, PathGrid, ThetaFamily};
use crate::simulate::{noise_running_sup, par_replicates, Ensemble, Path, PathSimulator};
use crate::stats::{fit_log_log, LineFit};

/// Tolerance on the fitted ε-exponent of the sup mean-square deviation.
pub const MSE_SLOPE_TOLERANCE: f64 = 0.15;
/// Relative tolerance for the closed-form `ε²T` case.
pub const CLOSED_FORM_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathwiseCheck {
    pub epsilon: f64,
    pub n_paths: usize,
    pub n_points: usize,
    /// Discretization slack `δ`, calibrated from the ε = 0 path.
    pub slack: f64,
    pub violations: usize,
    pub violation_fraction: f64,
    /// Largest `|X_t - x_t| / (e^{Lt} ε sup|V| + δ)` seen.
    pub max_ratio: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MseScaling {
    pub epsilons: Vec<f64>,
    pub n_replicates: usize,
    pub n_steps: usize,
    /// `max_i` of the Monte Carlo mean of `(X_{t_i} - x_{t_i})²`.
    pub sup_mse: Vec<f64>,
    pub argmax_time: Vec<f64>,
    pub fit: LineFit,
    pub expected_slope: f64,
    pub tolerance: f64,
    /// `ε²T`, when the model has `X - x = εW` exactly.
    pub closed_form: Option<Vec<f64>>,
    pub closed_form_max_rel_error: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationReport {
    pub pathwise: PathwiseCheck,
    pub mse: MseScaling,
    pub passed: bool,
}

/// `max_i |X^{ε=0}_i - x_i|`: Euler error of the noiseless path.
pub fn zero_noise_slack(spec: &ModelSpec, grid: &PathGrid) -> Result<f64> {
    let euler = PathSimulator::new(spec, grid).run(0.0, 0, &vec![0.0; grid.n_steps])?;
    let limit = limit_path(spec, grid)?;
    Ok(euler
        .x
        .iter()
        .zip(&limit)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

/// Number of violations and the worst ratio for one path.
fn pathwise_one(path: &Path, spec: &ModelSpec, limit: &[f64], slack: f64) -> (usize, f64) {
    let sup = noise_running_sup(path, spec);
    let l = spec.theta.bound;
    let mut violations = 0;
    let mut worst = 0.0f64;
    for i in 0..path.x.len() {
        let t = path.grid.time(i);
        let dev = (path.x[i] - limit[i]).abs();
        let bound = (l * t).exp() * path.epsilon * sup[i] + slack;
        // X and the noise integral are accumulated separately; allow a few
        // ulps of rounding per step, which matters when the bound is tight
        let rounding = 4.0 * f64::EPSILON * (i as f64 + 1.0) * path.x[i].abs().max(limit[i].abs());
        if dev > bound * (1.0 + 1e-12) + rounding {
            violations += 1;
        }
        if bound > 0.0 {
            worst = worst.max(dev / bound);
        }
    }
    (violations, worst)
}

/// Pathwise inequality `|X_t - x_t| ≤ e^{Lt} ε sup_{u≤t}|V_u| + δ` on
/// every grid point of `n_replicates` fresh paths.
pub fn pathwise_check(spec: &ModelSpec, grid: &PathGrid, epsilon: f64, mc: &MonteCarlo) -> Result<PathwiseCheck> {
    let slack = zero_noise_slack(spec, grid)? * (1.0 + 1e-9);
    let limit = limit_path(spec, grid)?;
    let sim = PathSimulator::new(spec, grid);
    let per_path = par_replicates(mc.n_replicates, mc.master_seed, |_, seed| {
        let path = sim.simulate(epsilon, seed)?;
        Ok(pathwise_one(&path, spec, &limit, slack))
    })?;
    Ok(summarize_pathwise(epsilon, grid, slack, &per_path))
}

/// As [`pathwise_check`] on an existing ensemble.
pub fn ensemble_pathwise(ensemble: &Ensemble) -> Result<PathwiseCheck> {
    let first = ensemble
        .paths
        .first()
        .ok_or_else(|| Error::Precondition("empty ensemble".into()))?;
    let spec = &ensemble.spec;
    let grid = first.grid;
    let slack = zero_noise_slack(spec, &grid)? * (1.0 + 1e-9);
    let limit = limit_path(spec, &grid)?;
    let per_path: Vec<_> = ensemble
        .paths
        .iter()
        .map(|p| pathwise_one(p, spec, &limit, slack))
        .collect();
    Ok(summarize_pathwise(first.epsilon, &grid, slack, &per_path))
}

fn summarize_pathwise(epsilon: f64, grid: &PathGrid, slack: f64, per_path: &[(usize, f64)]) -> PathwiseCheck {
    let violations: usize = per_path.iter().map(|p| p.0).sum();
    let max_ratio = per_path.iter().fold(0.0f64, |m, p| m.max(p.1));
    let n_points = grid.n_steps + 1;
    PathwiseCheck {
        epsilon,
        n_paths: per_path.len(),
        n_points,
        slack,
        violations,
        violation_fraction: violations as f64 / (per_path.len() * n_points) as f64,
        max_ratio,
        passed: violations == 0,
    }
}

fn has_closed_form(spec: &ModelSpec) -> bool {
    matches!(spec.theta.family, ThetaFamily::Constant { c } if c == 0.0) && spec.sigma1.is_one() && spec.sigma2.is_one()
}

/// `sup_t Ê(X_t - x_t)²` per ε and its fitted ε-exponent.
pub fn mse_scaling(spec: &ModelSpec, grid: &PathGrid, epsilons: &[f64], mc: &MonteCarlo) -> Result<MseScaling> {
    if epsilons.is_empty() || epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Config("epsilon list must be non-empty and positive".into()));
    }
    let limit = limit_path(spec, grid)?;
    let sim = PathSimulator::new(spec, grid);
    let len = grid.n_steps + 1;
    let mut sup_mse = Vec::with_capacity(epsilons.len());
    let mut argmax_time = Vec::with_capacity(epsilons.len());
    // common random numbers: every ε reuses the same replicate seeds
    for &eps in epsilons {
        let sums = replicate_sum(mc.n_replicates, mc.master_seed, len, |_, s| {
            let p = sim.simulate(eps, s)?;
            Ok(p.x.iter().zip(&limit).map(|(a, b)| (a - b) * (a - b)).collect())
        })?;
        let (i_max, m) = sums
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        sup_mse.push(m / mc.n_replicates as f64);
        argmax_time.push(grid.time(i_max));
    }
    let fit = if epsilons.len() >= 2 {
        fit_log_log(epsilons, &sup_mse)
    } else {
        LineFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            slope_se: f64::NAN,
        }
    };
    let (closed_form, closed_form_max_rel_error) = if has_closed_form(spec) {
        let cf: Vec<f64> = epsilons.iter().map(|e| e * e * grid.horizon).collect();
        let err = cf
            .iter()
            .zip(&sup_mse)
            .fold(0.0f64, |m, (c, s)| m.max((s / c - 1.0).abs()));
        (Some(cf), Some(err))
    } else {
        (None, None)
    };
    let slope_ok = epsilons.len() < 2 || (fit.slope - 2.0).abs() <= MSE_SLOPE_TOLERANCE;
    let closed_ok = closed_form_max_rel_error.is_none_or(|e| e <= CLOSED_FORM_TOLERANCE);
    Ok(MseScaling {
        epsilons: epsilons.to_vec(),
        n_replicates: mc.n_replicates,
        n_steps: grid.n_steps,
        sup_mse,
        argmax_time,
        fit,
        expected_slope: 2.0,
        tolerance: MSE_SLOPE_TOLERANCE,
        closed_form,
        closed_form_max_rel_error,
        passed: slope_ok && closed_ok,
    })
}

/// Both halves of the deviation bound: pathwise at `pathwise_epsilon`,
/// mean-square across `epsilons`.
pub fn check_deviation_bounds(
    spec: &ModelSpec,
    grid: &PathGrid,
    epsilons: &[f64],
    pathwise_epsilon: f64,
    mc: &MonteCarlo,
) -> Result<DeviationReport> {
    let pathwise = pathwise_check(spec, grid, pathwise_epsilon, mc)?;
    let mse = mse_scaling(spec, grid, epsilons, mc)?;
    let passed = pathwise.passed && mse.passed;
    Ok(DeviationReport { pathwise, mse, passed })
}
